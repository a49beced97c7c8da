/** Pure view-model layer: everything the table renders is derived here.
 *
 * The screen state is computed only from the server's PlayerView plus local
 * UI state (selected cell, pending request flag, event cursor). No hidden
 * information is inferred client-side: a control is enabled exactly when the
 * server listed the matching action as legal.
 */

import {
  GameConfigView,
  LastResult,
  PlayerView,
  SessionEvent,
  StandingBid,
  WireAction,
  sameAction,
} from "./types.js";

export interface TableViewModel {
  view: PlayerView | null;
  selected: { q: number; r: number } | null;
  pending: boolean;
  eventCursor: number;
  log: string[];
  showdown: LastResult | null;
  errorBanner: string | null;
}

export function freshModel(): TableViewModel {
  return {
    view: null,
    selected: null,
    pending: false,
    eventCursor: 0,
    log: [],
    showdown: null,
    errorBanner: null,
  };
}

export interface GridCell {
  q: number;
  r: number;
  enabled: boolean;
  selected: boolean;
  isStanding: boolean;
}

export interface ScreenState {
  ownHand: number[];
  seats: string[];
  round: number;
  phase: string;
  turnSeat: number | null;
  yourTurn: boolean;
  standingBid: StandingBid | null;
  rebidBadge: boolean;
  grid: GridCell[][];
  challengeButton: { label: "Challenge" | "Count"; enabled: boolean };
  submitEnabled: boolean;
  ledger: number[];
  historyLines: string[];
  showdown: LastResult | null;
  errorBanner: string | null;
}

function describeAction(seat: number, action: WireAction): string {
  return action.type === "challenge"
    ? `seat ${seat}: challenge`
    : `seat ${seat}: bid ${action.q} of ${action.r}`;
}

/** Derive the full screen state for one seat. */
export function renderTable(model: TableViewModel): ScreenState {
  const view = model.view;
  if (!view) {
    throw new Error("no view yet: refetch before rendering");
  }
  const cfg: GameConfigView = view.config;
  const maxQ = cfg.hand_length * cfg.num_players;
  const legalBids = new Set(
    view.legal_actions
      .filter((a): a is Extract<WireAction, { type: "bid" }> => a.type === "bid")
      .map((a) => `${a.q},${a.r}`),
  );
  const challengeLegal = view.legal_actions.some((a) => a.type === "challenge");
  const actable = view.your_turn && !model.pending && view.status === "live";

  const grid: GridCell[][] = [];
  for (let q = 1; q <= maxQ; q++) {
    const row: GridCell[] = [];
    for (let r = 1; r <= cfg.digit_cardinality; r++) {
      row.push({
        q,
        r,
        enabled: actable && legalBids.has(`${q},${r}`),
        selected:
          model.selected !== null &&
          model.selected.q === q &&
          model.selected.r === r,
        isStanding:
          view.standing_bid !== null &&
          view.standing_bid.q === q &&
          view.standing_bid.r === r,
      });
    }
    grid.push(row);
  }

  return {
    ownHand: [...view.hand],
    seats: [...view.seats],
    round: view.round,
    phase: view.phase,
    turnSeat: view.to_act,
    yourTurn: view.your_turn,
    standingBid: view.standing_bid,
    rebidBadge: view.standing_bid?.is_rebid ?? false,
    grid,
    challengeButton: {
      label: view.phase === "bidder_decision" ? "Count" : "Challenge",
      enabled: actable && challengeLegal,
    },
    submitEnabled:
      actable &&
      model.selected !== null &&
      legalBids.has(`${model.selected.q},${model.selected.r}`),
    ledger: [...view.ledger],
    historyLines: view.history.map((h) => describeAction(h.seat, h.action)),
    showdown: model.showdown,
    errorBanner: model.errorBanner,
  };
}

/** Fold one server event into the model (history log, showdown reveal). */
export function applyEvent(model: TableViewModel, event: SessionEvent): void {
  if (event.seq <= model.eventCursor) return;
  model.eventCursor = event.seq;
  switch (event.kind) {
    case "round_start": {
      const p = event.payload as { round: number; opener: number };
      model.log.push(`round ${p.round} (opener seat ${p.opener})`);
      model.showdown = null;
      break;
    }
    case "action": {
      const p = event.payload as { seat: number; action: WireAction };
      model.log.push(describeAction(p.seat, p.action));
      break;
    }
    case "resolution": {
      model.showdown = event.payload as unknown as LastResult;
      const r = model.showdown;
      model.log.push(
        `showdown: ${r.final_bid.q} of ${r.final_bid.r} by seat ` +
          `${r.final_bidder} ${r.bid_holds ? "held" : "failed"}; ` +
          `payouts ${r.payouts.join(", ")}`,
      );
      break;
    }
    case "turn":
    case "closed":
      break;
  }
}

/** The action a UI selection stands for, or null when nothing is armed. */
export function selectionAction(model: TableViewModel): WireAction | null {
  if (model.selected === null) return null;
  return { type: "bid", q: model.selected.q, r: model.selected.r };
}

/** True when the view lists the action as legal right now. */
export function isLegal(view: PlayerView, action: WireAction): boolean {
  return view.legal_actions.some((a) => sameAction(a, action));
}
