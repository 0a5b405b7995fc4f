import { ApiClient } from "./api.js";
import { AnnotationSession } from "./state.js";
import { HEARTBEAT_MS, claimTab } from "./tabguard.js";
import { render } from "./view.js";

/** Boot: claim the tab, bind to the service on the same origin, wire
 * the keyboard, and keep the view in sync with the session state. */

export async function boot(root: HTMLElement): Promise<AnnotationSession | null> {
  const claim = claimTab(localStorage);
  if (!claim.ok) {
    root.textContent =
      "This annotation session is open in another tab. Close it first.";
    return null;
  }
  setInterval(claim.heartbeat!, HEARTBEAT_MS);
  const api = new ApiClient("");
  const session = new AnnotationSession(api, {
    onChange: () => render(root, session),
  });
  document.addEventListener("keydown", (event) => {
    if (event.altKey || event.ctrlKey || event.metaKey) return;
    if (session.handleKey(event.key)) event.preventDefault();
  });
  await session.start();
  render(root, session);
  return session;
}

const mount = document.getElementById("app");
if (mount) {
  boot(mount).catch((err) => {
    mount.textContent = `Failed to start: ${err}`;
  });
}
