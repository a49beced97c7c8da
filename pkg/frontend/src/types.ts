/** Wire types mirrored from the play service API (schema version 1). */

export interface BidAction {
  type: "bid";
  q: number;
  r: number;
}

export interface ChallengeAction {
  type: "challenge";
}

export type WireAction = BidAction | ChallengeAction;

export interface StandingBid {
  type: "bid";
  q: number;
  r: number;
  bidder: number;
  is_rebid: boolean;
}

export interface GameConfigView {
  hand_length: number;
  digit_cardinality: number;
  num_players: number;
}

export interface LastResult {
  round: number;
  hands: number[][];
  totals: number[];
  final_bid: { q: number; r: number };
  final_bidder: number;
  bid_holds: boolean;
  payouts: number[];
  ledger: number[];
}

export interface PlayerView {
  schema: number;
  session: string;
  status: string;
  config: GameConfigView;
  seat: number;
  seats: string[];
  round: number;
  hand: number[];
  history: { seat: number; action: WireAction }[];
  standing_bid: StandingBid | null;
  phase: string;
  to_act: number | null;
  your_turn: boolean;
  legal_actions: WireAction[];
  ledger: number[];
  last_result: LastResult | null;
  event_count: number;
}

export interface SessionEvent {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export function sameAction(a: WireAction, b: WireAction): boolean {
  if (a.type !== b.type) return false;
  if (a.type === "challenge") return true;
  const bb = b as BidAction;
  return a.q === bb.q && a.r === bb.r;
}

/** Total order the server uses for bids: (q - 1) * D + (r - 1). */
export function bidIndex(config: GameConfigView, q: number, r: number): number {
  return (q - 1) * config.digit_cardinality + (r - 1);
}
