import type { AnnotationSession, TrackedItem } from "./state.js";
import { REFERENCE_WORDS_PER_HOUR } from "./types.js";

/** DOM renderer.  Everything goes through textContent, so word forms
 * and tag codes can contain any characters. */

function el(
  tag: string,
  className?: string,
  text?: string,
): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderContext(
  parent: HTMLElement,
  tokens: { form: string; tag: string | null }[],
): void {
  for (const tok of tokens) {
    const span = el("span", "ctx-token", tok.form);
    span.title = tok.tag ?? "(unresolved)";
    if (tok.tag === null) span.classList.add("ctx-masked");
    parent.appendChild(span);
  }
}

function renderItem(
  entry: TrackedItem,
  focused: boolean,
  onChoose: (index: number) => void,
): HTMLElement {
  const root = el("article", `item item-${entry.state}`);
  if (focused) root.classList.add("item-focused");
  root.dataset["position"] = entry.item.position;

  const sentence = el("div", "sentence");
  renderContext(sentence, entry.item.left_context);
  sentence.appendChild(el("strong", "target", entry.item.form));
  renderContext(sentence, entry.item.right_context);
  root.appendChild(sentence);

  const list = el("div", "candidates");
  entry.item.candidates.forEach((tag, index) => {
    const button = el("button", "candidate") as HTMLButtonElement;
    button.type = "button";
    button.appendChild(el("kbd", "key", String(index + 1)));
    button.appendChild(el("span", "tag", tag));
    entry.item.proposals.forEach((p, tagger) => {
      if (p === tag) {
        const mark = el("span", "proposal", String.fromCharCode(65 + tagger));
        mark.title = `proposed by tagger ${tagger + 1}`;
        button.appendChild(mark);
      }
    });
    if (entry.chosen === tag) button.classList.add("chosen");
    button.disabled = entry.state !== "pending";
    button.addEventListener("click", () => onChoose(index));
    list.appendChild(button);
  });
  root.appendChild(list);

  if (entry.note) {
    root.appendChild(el("div", "note", entry.note));
  }
  if (entry.state === "staged") {
    root.appendChild(el("div", "hint", "press u to undo"));
  }
  return root;
}

export function render(root: HTMLElement, session: AnnotationSession): void {
  root.textContent = "";

  if (session.sessionMismatch) {
    const banner = el(
      "div",
      "banner banner-fatal",
      "Another session owns this checkpoint (session id mismatch). " +
        "Close the other tab and reload.",
    );
    root.appendChild(banner);
    return;
  }

  const header = el("header", "progress");
  const done = session.completedCount;
  const total = session.totalCount;
  header.appendChild(el("span", "progress-count", `${done} / ${total}`));
  const rate = session.progress?.words_per_hour ?? 0;
  header.appendChild(
    el(
      "span",
      "progress-rate",
      `${Math.round(rate)} words/h (reference ${REFERENCE_WORDS_PER_HOUR})`,
    ),
  );
  root.appendChild(header);

  if (session.networkError) {
    const banner = el(
      "div",
      "banner banner-retry",
      `Network trouble: ${session.networkError}. Retrying; nothing was lost.`,
    );
    root.appendChild(banner);
  }

  if (session.finished) {
    const doneScreen = el("section", "completion");
    doneScreen.appendChild(el("h2", undefined, "Queue complete"));
    doneScreen.appendChild(
      el(
        "p",
        undefined,
        `${done} of ${total} disagreements annotated. ` +
          `Run corrections-apply on the checkpoint to build the corrected corpus.`,
      ),
    );
    root.appendChild(doneScreen);
    return;
  }

  const list = el("section", "queue");
  session.items.forEach((entry, index) => {
    list.appendChild(
      renderItem(entry, index === session.focusIndex, (candidate) => {
        if (index === session.focusIndex) session.stage(candidate);
      }),
    );
  });
  root.appendChild(list);

  const help = el(
    "footer",
    "help",
    "1-9 choose tag · arrows/j/k move · u undo before sync",
  );
  root.appendChild(help);
}
