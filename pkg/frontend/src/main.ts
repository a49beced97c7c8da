/** Browser entry: joins a session from the query string and renders the
 * table into #app, redrawing on every server event (SSE with polling
 * fallback inside the client).
 *
 * Usage: index.html?session=<id>&seat=<k>[&base=<service url>]
 */

import { PlayServiceClient } from "./api.js";
import { TableController } from "./controller.js";
import { ScreenState } from "./model.js";

function el(tag: string, cls: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  if (text) node.textContent = text;
  return node;
}

function draw(root: HTMLElement, controller: TableController): void {
  const s: ScreenState = controller.screen();
  root.replaceChildren();

  const status = el(
    "div",
    "status",
    `round ${s.round} | phase ${s.phase} | ` +
      (s.yourTurn ? "your turn" : `seat ${s.turnSeat ?? "-"} to act`),
  );
  root.append(status);

  root.append(el("div", "hand", `your hand: ${s.ownHand.join(" ")}`));

  if (s.standingBid) {
    root.append(
      el(
        "div",
        "standing",
        `standing bid: ${s.standingBid.q} of ${s.standingBid.r} ` +
          `by seat ${s.standingBid.bidder}${s.rebidBadge ? " [rebid]" : ""}`,
      ),
    );
  }

  const grid = el("table", "bidgrid");
  for (const row of s.grid) {
    const tr = document.createElement("tr");
    for (const cell of row) {
      const td = document.createElement("td");
      const button = document.createElement("button");
      button.textContent = `${cell.q}x${cell.r}`;
      button.disabled = !cell.enabled;
      if (cell.isStanding) button.classList.add("standing");
      button.onclick = () => {
        controller.select(cell.q, cell.r);
        void controller.submitBid(cell.q, cell.r).then(() => draw(root, controller));
      };
      td.append(button);
      tr.append(td);
    }
    grid.append(tr);
  }
  root.append(grid);

  const challenge = document.createElement("button");
  challenge.textContent = s.challengeButton.label;
  challenge.disabled = !s.challengeButton.enabled;
  challenge.onclick = () => {
    void controller.submitChallenge().then(() => draw(root, controller));
  };
  root.append(challenge);

  root.append(
    el("div", "ledger", `ledger: ${s.ledger.map((v, i) => `seat ${i}: ${v}`).join(", ")}`),
  );

  if (s.showdown) {
    root.append(
      el(
        "div",
        "showdown",
        `showdown: hands ${JSON.stringify(s.showdown.hands)}; ` +
          `totals ${s.showdown.totals.join(", ")}; ` +
          `payouts ${s.showdown.payouts.join(", ")}`,
      ),
    );
  }

  const log = el("div", "log");
  for (const line of controller.model.log.slice(-20)) {
    log.append(el("div", "logline", line));
  }
  root.append(log);

  if (s.errorBanner) root.append(el("div", "error", s.errorBanner));
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const base = params.get("base") ?? "";
  const sessionId = params.get("session");
  const seat = Number(params.get("seat") ?? "0");
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  if (!sessionId) {
    root.textContent = "missing ?session=<id>&seat=<k>";
    return;
  }
  const client = new PlayServiceClient(base);
  const controller = new TableController(client, sessionId, seat);
  await controller.refresh();
  draw(root, controller);
  for await (const event of client.streamEvents(sessionId, 0)) {
    const { applyEvent } = await import("./model.js");
    applyEvent(controller.model, event);
    await controller.refresh();
    draw(root, controller);
  }
}

void boot();
