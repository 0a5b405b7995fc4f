import { ApiClient, ApiError } from "./api.js";
import type { ProgressInfo, QueueItem, SessionInfo } from "./types.js";

/** Lifecycle of one queue item inside the client.
 *
 * pending -> staged (digit pressed, undoable) -> posting -> done.
 * A 422 or an unknown-position 400 drops the item back to pending with
 * an inline note; a 409 marks it done as a conflict (someone else
 * annotated it).  Items whose payload violates the queue invariants
 * are flagged invalid and never annotatable.
 */
export type ItemState = "pending" | "staged" | "posting" | "done" | "invalid";

export interface TrackedItem {
  item: QueueItem;
  state: ItemState;
  chosen: string | null;
  note: string | null;
  conflicted: boolean;
}

export interface Scheduler {
  schedule(fn: () => void, ms: number): number;
  cancel(id: number): void;
}

const defaultScheduler: Scheduler = {
  schedule: (fn, ms) => setTimeout(fn, ms) as unknown as number,
  cancel: (id) => clearTimeout(id),
};

export interface SessionOptions {
  batchSize?: number;
  /** grace period during which a staged choice can be undone */
  stageDelayMs?: number;
  annotator?: string;
  scheduler?: Scheduler;
  onChange?: () => void;
}

export function itemInvalidReason(item: QueueItem): string | null {
  if (item.candidates.length === 0) return "no candidate tags";
  if (!item.proposals.every((p) => item.candidates.includes(p)))
    return "proposal outside the candidate set";
  if (new Set(item.proposals).size <= 1)
    return "taggers agree here; this should not be in the queue";
  return null;
}

export class AnnotationSession {
  items: TrackedItem[] = [];
  focusIndex = 0;
  session: SessionInfo | null = null;
  progress: ProgressInfo | null = null;
  networkError: string | null = null;
  sessionMismatch = false;
  private lastStaged: TrackedItem | null = null;
  private timers = new Map<string, number>();
  private readonly batchSize: number;
  private readonly stageDelayMs: number;
  private readonly annotator: string;
  private readonly scheduler: Scheduler;
  private readonly onChange: () => void;

  constructor(
    private readonly api: ApiClient,
    opts: SessionOptions = {},
  ) {
    this.batchSize = opts.batchSize ?? 10;
    this.stageDelayMs = opts.stageDelayMs ?? 300;
    this.annotator = opts.annotator ?? "annotator";
    this.scheduler = opts.scheduler ?? defaultScheduler;
    this.onChange = opts.onChange ?? (() => {});
  }

  async start(): Promise<void> {
    this.session = await this.api.session();
    await this.refresh();
  }

  /** Rebuild pending items and progress from the server; local choices
   * that were never acknowledged are discarded by design (the server
   * checkpoint is the single source of truth). */
  async refresh(): Promise<void> {
    try {
      this.progress = await this.api.progress();
      const batch = await this.api.batch(this.batchSize);
      if (this.session && batch.session_id !== this.session.session_id) {
        this.sessionMismatch = true;
        this.onChange();
        return;
      }
      this.items = batch.items.map((item) => {
        const invalid = itemInvalidReason(item);
        return {
          item,
          state: invalid === null ? "pending" : ("invalid" as ItemState),
          chosen: null,
          note: invalid,
          conflicted: false,
        };
      });
      this.focusIndex = this.firstActionable(0);
      this.networkError = null;
    } catch (err) {
      this.networkError = describe(err);
    }
    this.onChange();
  }

  get focused(): TrackedItem | null {
    return this.items[this.focusIndex] ?? null;
  }

  get completedCount(): number {
    return this.progress?.completed ?? 0;
  }

  get totalCount(): number {
    return this.progress?.total ?? this.session?.total ?? 0;
  }

  get finished(): boolean {
    return (
      this.progress !== null &&
      this.progress.remaining === 0 &&
      this.items.every((i) => i.state === "done" || i.state === "invalid")
    );
  }

  private firstActionable(from: number): number {
    for (let i = from; i < this.items.length; i++) {
      const entry = this.items[i];
      if (entry && entry.state === "pending") return i;
    }
    return Math.min(from, Math.max(this.items.length - 1, 0));
  }

  /** Keyboard dispatch; returns true when the key did something. */
  handleKey(key: string): boolean {
    if (this.sessionMismatch) return false;
    if (key >= "1" && key <= "9") {
      return this.stage(Number(key) - 1);
    }
    if (key === "ArrowDown" || key === "j") return this.move(+1);
    if (key === "ArrowUp" || key === "k") return this.move(-1);
    if (key === "u") return this.undo();
    return false;
  }

  private move(delta: number): boolean {
    let i = this.focusIndex + delta;
    while (i >= 0 && i < this.items.length) {
      const entry = this.items[i];
      if (entry && entry.state !== "done" && entry.state !== "invalid") {
        this.focusIndex = i;
        this.onChange();
        return true;
      }
      i += delta;
    }
    return false;
  }

  /** Stage the focused item's n-th candidate.  Out-of-range digits are
   * a no-op, so a tag outside the candidate list is unrepresentable. */
  stage(candidateIndex: number): boolean {
    const entry = this.focused;
    if (!entry || entry.state !== "pending") return false;
    const tag = entry.item.candidates[candidateIndex];
    if (tag === undefined) return false;
    entry.state = "staged";
    entry.chosen = tag;
    entry.note = null;
    this.lastStaged = entry;
    const id = this.scheduler.schedule(
      () => void this.flush(entry),
      this.stageDelayMs,
    );
    this.timers.set(entry.item.position, id);
    this.focusIndex = this.firstActionable(this.focusIndex);
    this.onChange();
    return true;
  }

  /** Undo the last staged choice while it has not been posted yet. */
  undo(): boolean {
    const entry = this.lastStaged;
    if (!entry || entry.state !== "staged") return false;
    const id = this.timers.get(entry.item.position);
    if (id !== undefined) this.scheduler.cancel(id);
    this.timers.delete(entry.item.position);
    entry.state = "pending";
    entry.chosen = null;
    this.lastStaged = null;
    this.focusIndex = this.items.indexOf(entry);
    this.onChange();
    return true;
  }

  async flush(entry: TrackedItem): Promise<void> {
    if (entry.state !== "staged" || entry.chosen === null) return;
    this.timers.delete(entry.item.position);
    entry.state = "posting";
    this.onChange();
    try {
      const ack = await this.api.annotate(
        entry.item.position,
        entry.chosen,
        this.annotator,
      );
      entry.state = "done";
      this.networkError = null;
      if (this.progress) {
        this.progress.completed = ack.completed;
        this.progress.remaining = ack.remaining;
      }
      if (this.lastStaged === entry) this.lastStaged = null;
      await this.maybeRefill();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // somebody already annotated it: accept and move on
        entry.state = "done";
        entry.conflicted = true;
        entry.note = "already annotated";
        if (this.lastStaged === entry) this.lastStaged = null;
        try {
          this.progress = await this.api.progress();
        } catch {
          // keep the stale numbers; next refresh fixes them
        }
        await this.maybeRefill();
      } else if (err instanceof ApiError) {
        // 422 or 400: server refused the tag; keep the item, show why
        entry.state = "pending";
        entry.chosen = null;
        entry.note = err.message;
        this.focusIndex = this.items.indexOf(entry);
      } else {
        // network failure: keep the choice, show the banner, retry
        entry.state = "staged";
        this.networkError = describe(err);
        const id = this.scheduler.schedule(
          () => void this.flush(entry),
          this.stageDelayMs * 4,
        );
        this.timers.set(entry.item.position, id);
      }
    }
    this.onChange();
  }

  /** Pull more queue items once everything on screen is settled. */
  private async maybeRefill(): Promise<void> {
    const open = this.items.filter(
      (i) => i.state === "pending" || i.state === "staged" || i.state === "posting",
    );
    if (open.length > 0) return;
    if (this.progress && this.progress.remaining === 0) return;
    const batch = await this.api.batch(this.batchSize);
    if (this.session && batch.session_id !== this.session.session_id) {
      this.sessionMismatch = true;
      return;
    }
    const known = new Set(this.items.map((i) => i.item.position));
    for (const item of batch.items) {
      if (known.has(item.position)) continue;
      const invalid = itemInvalidReason(item);
      this.items.push({
        item,
        state: invalid === null ? "pending" : "invalid",
        chosen: null,
        note: invalid,
        conflicted: false,
      });
    }
    this.focusIndex = this.firstActionable(this.focusIndex);
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
