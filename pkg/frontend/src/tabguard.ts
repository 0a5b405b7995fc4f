/** Single-tab guard.
 *
 * The annotation workflow is single-annotator, so a second tab on the
 * same checkpoint is refused: the first tab writes a heartbeat claim
 * into localStorage and later tabs back off while the claim is fresh.
 */

export interface ClaimStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export const TAB_CLAIM_KEY = "tagboot-annotate-tab";
export const HEARTBEAT_MS = 2000;

interface TabClaim {
  nonce: string;
  ts: number;
}

export function claimTab(
  store: ClaimStore,
  now: () => number = Date.now,
  nonce: string = Math.random().toString(36).slice(2),
): { ok: boolean; heartbeat?: () => void } {
  const raw = store.getItem(TAB_CLAIM_KEY);
  if (raw) {
    try {
      const claim = JSON.parse(raw) as TabClaim;
      if (claim.nonce !== nonce && now() - claim.ts < HEARTBEAT_MS * 3) {
        return { ok: false };
      }
    } catch {
      // stale or corrupt claim: take over
    }
  }
  const heartbeat = () =>
    store.setItem(TAB_CLAIM_KEY, JSON.stringify({ nonce, ts: now() }));
  heartbeat();
  return { ok: true, heartbeat };
}
