/** One seat's table controller: fetch/refresh, event folding, submissions.
 *
 * A single mutation may be in flight at a time; the pending flag disables
 * every control until the server answers, so a double-click cannot send two
 * requests. A rejected action surfaces the server's echoed legal set in the
 * error banner and the controls re-enable after a refetch.
 */

import { ApiError, PlayServiceClient } from "./api.js";
import {
  TableViewModel,
  applyEvent,
  freshModel,
  isLegal,
  renderTable,
  ScreenState,
} from "./model.js";
import { SessionEvent, WireAction } from "./types.js";

export class TableController {
  readonly model: TableViewModel = freshModel();

  constructor(
    private client: PlayServiceClient,
    private sessionId: string,
    private seat: number,
  ) {}

  async refresh(): Promise<void> {
    this.model.view = await this.client.getView(this.sessionId, this.seat);
  }

  async pullEvents(): Promise<SessionEvent[]> {
    const events = await this.client.pollEvents(
      this.sessionId,
      this.model.eventCursor,
    );
    for (const event of events) applyEvent(this.model, event);
    return events;
  }

  screen(): ScreenState {
    return renderTable(this.model);
  }

  select(q: number, r: number): void {
    this.model.selected = { q, r };
  }

  async submitBid(q: number, r: number): Promise<boolean> {
    return this.submit({ type: "bid", q, r });
  }

  async submitChallenge(): Promise<boolean> {
    return this.submit({ type: "challenge" });
  }

  /** Send one action; true when the server accepted it. */
  async submit(action: WireAction): Promise<boolean> {
    const view = this.model.view;
    if (this.model.pending || !view) return false;
    if (!view.your_turn || !isLegal(view, action)) return false;
    this.model.pending = true;
    this.model.errorBanner = null;
    try {
      this.model.view = await this.client.submitAction(
        this.sessionId,
        this.seat,
        action,
      );
      this.model.selected = null;
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        const legal = err.legalActions
          ? ` (legal: ${err.legalActions
              .map((a) => (a.type === "challenge" ? "challenge" : `${a.q} of ${a.r}`))
              .join(", ")})`
          : "";
        this.model.errorBanner = `${err.message}${legal}`;
        await this.refresh();
        return false;
      }
      this.model.errorBanner = "network failure: retry";
      throw err;
    } finally {
      this.model.pending = false;
    }
  }
}
