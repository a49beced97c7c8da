import { describe, expect, it } from "vitest";

import { parseSseChunk } from "../src/api.js";
import { applyEvent, freshModel, renderTable } from "../src/model.js";
import { PlayerView, WireAction, bidIndex } from "../src/types.js";

function makeView(overrides: Partial<PlayerView> = {}): PlayerView {
  return {
    schema: 1,
    session: "abc",
    status: "live",
    config: { hand_length: 3, digit_cardinality: 3, num_players: 2 },
    seat: 0,
    seats: ["human", "baseline"],
    round: 1,
    hand: [1, 2, 2],
    history: [],
    standing_bid: null,
    phase: "bidding",
    to_act: 0,
    your_turn: true,
    legal_actions: [],
    ledger: [0, 0],
    last_result: null,
    event_count: 2,
    ...overrides,
  };
}

function legalAbove(standing: { q: number; r: number } | null): WireAction[] {
  const config = { hand_length: 3, digit_cardinality: 3, num_players: 2 };
  const floor = standing ? bidIndex(config, standing.q, standing.r) : -1;
  const actions: WireAction[] = [];
  for (let q = 1; q <= 6; q++) {
    for (let r = 1; r <= 3; r++) {
      if (bidIndex(config, q, r) > floor) actions.push({ type: "bid", q, r });
    }
  }
  if (standing) actions.push({ type: "challenge" });
  return actions;
}

describe("renderTable", () => {
  it("disables every grid cell at or below the standing bid", () => {
    const standing = { q: 4, r: 2 };
    const model = freshModel();
    model.view = makeView({
      standing_bid: { type: "bid", ...standing, bidder: 1, is_rebid: false },
      legal_actions: legalAbove(standing),
    });
    const screen = renderTable(model);
    const config = model.view.config;
    const floor = bidIndex(config, standing.q, standing.r);
    for (const row of screen.grid) {
      for (const cell of row) {
        const expected = bidIndex(config, cell.q, cell.r) > floor;
        expect(cell.enabled, `cell ${cell.q}x${cell.r}`).toBe(expected);
      }
    }
    expect(screen.challengeButton.enabled).toBe(true);
    expect(screen.challengeButton.label).toBe("Challenge");
  });

  it("has a 6x3 grid for a 3x3 2-player game and marks the standing cell", () => {
    const model = freshModel();
    model.view = makeView({
      standing_bid: { type: "bid", q: 2, r: 3, bidder: 1, is_rebid: false },
      legal_actions: legalAbove({ q: 2, r: 3 }),
    });
    const screen = renderTable(model);
    expect(screen.grid.length).toBe(6);
    expect(screen.grid[0].length).toBe(3);
    expect(screen.grid[1][2].isStanding).toBe(true);
  });

  it("labels the button Count in the bidder-decision phase", () => {
    const model = freshModel();
    model.view = makeView({
      phase: "bidder_decision",
      standing_bid: { type: "bid", q: 3, r: 1, bidder: 0, is_rebid: false },
      legal_actions: legalAbove({ q: 3, r: 1 }),
    });
    const screen = renderTable(model);
    expect(screen.challengeButton.label).toBe("Count");
    expect(screen.challengeButton.enabled).toBe(true);
    expect(screen.grid.some((row) => row.some((c) => c.enabled))).toBe(true);
  });

  it("shows the rebid badge", () => {
    const model = freshModel();
    model.view = makeView({
      standing_bid: { type: "bid", q: 5, r: 1, bidder: 1, is_rebid: true },
      legal_actions: legalAbove({ q: 5, r: 1 }),
    });
    expect(renderTable(model).rebidBadge).toBe(true);
  });

  it("disables everything when it is not your turn", () => {
    const model = freshModel();
    model.view = makeView({
      your_turn: false,
      to_act: 1,
      legal_actions: [],
      standing_bid: { type: "bid", q: 1, r: 1, bidder: 0, is_rebid: false },
    });
    const screen = renderTable(model);
    expect(screen.challengeButton.enabled).toBe(false);
    expect(screen.grid.flat().every((c) => !c.enabled)).toBe(true);
  });

  it("disables everything while a request is pending", () => {
    const model = freshModel();
    model.view = makeView({ legal_actions: legalAbove(null) });
    model.pending = true;
    const screen = renderTable(model);
    expect(screen.grid.flat().some((c) => c.enabled)).toBe(false);
    expect(screen.submitEnabled).toBe(false);
  });

  it("renders only PlayerView data: no other seat's hand anywhere", () => {
    const model = freshModel();
    model.view = makeView({ legal_actions: legalAbove(null) });
    const screen = renderTable(model);
    const serialized = JSON.stringify(screen);
    expect(serialized).not.toContain('"hands"');
    expect(screen.ownHand).toEqual([1, 2, 2]);
  });
});

describe("applyEvent", () => {
  it("ignores stale sequence numbers and advances the cursor", () => {
    const model = freshModel();
    applyEvent(model, { seq: 3, kind: "action", payload: { seat: 1, action: { type: "challenge" } } });
    applyEvent(model, { seq: 2, kind: "action", payload: { seat: 0, action: { type: "challenge" } } });
    expect(model.eventCursor).toBe(3);
    expect(model.log.length).toBe(1);
  });

  it("reveals hands only through a resolution event", () => {
    const model = freshModel();
    applyEvent(model, { seq: 1, kind: "round_start", payload: { round: 1, opener: 0 } });
    expect(model.showdown).toBeNull();
    applyEvent(model, {
      seq: 2,
      kind: "resolution",
      payload: {
        round: 1,
        hands: [[1, 1, 1], [2, 2, 2]],
        totals: [3, 3, 0],
        final_bid: { q: 4, r: 1 },
        final_bidder: 0,
        bid_holds: false,
        payouts: [-1, 1],
        ledger: [-1, 1],
      },
    });
    expect(model.showdown?.totals).toEqual([3, 3, 0]);
    applyEvent(model, { seq: 3, kind: "round_start", payload: { round: 2, opener: 1 } });
    expect(model.showdown).toBeNull();
  });
});

describe("parseSseChunk", () => {
  it("extracts complete events and keeps the tail", () => {
    const event = { seq: 1, kind: "turn", payload: { seat: 0 } };
    const buffer =
      `id: 1\ndata: ${JSON.stringify(event)}\n\n` +
      ": keep-alive\n\n" +
      "id: 2\ndata: {\"seq\": 2,";
    const { events, rest } = parseSseChunk(buffer);
    expect(events).toEqual([event]);
    expect(rest).toContain('"seq": 2');
  });
});
