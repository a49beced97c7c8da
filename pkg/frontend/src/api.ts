/** Thin typed client for the play-service HTTP API. */

import { PlayerView, SessionEvent, WireAction } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public status: number,
    public legalActions: WireAction[] | null = null,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let message = `HTTP ${resp.status}`;
  let legal: WireAction[] | null = null;
  try {
    const body = (await resp.json()) as {
      error?: string;
      legal_actions?: WireAction[];
    };
    if (body.error) message = body.error;
    if (body.legal_actions) legal = body.legal_actions;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(message, resp.status, legal);
}

export interface CreateSessionRequest {
  config: {
    hand_length: number;
    digit_cardinality: number;
    num_players: number;
  };
  seats: string[];
  opener_rule?: "rotate" | "final_bidder";
  seed?: number;
}

export class PlayServiceClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  async createSession(req: CreateSessionRequest): Promise<string> {
    const body = await this.request<{ session: string }>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return body.session;
  }

  async getView(sessionId: string, seat: number): Promise<PlayerView> {
    return this.request<PlayerView>(`/sessions/${sessionId}/view?seat=${seat}`);
  }

  async submitAction(
    sessionId: string,
    seat: number,
    action: WireAction,
  ): Promise<PlayerView> {
    return this.request<PlayerView>(`/sessions/${sessionId}/actions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ seat, action }),
    });
  }

  /** Polling fallback: one JSON fetch of events after `since`. */
  async pollEvents(sessionId: string, since: number): Promise<SessionEvent[]> {
    const body = await this.request<{ events: SessionEvent[] }>(
      `/sessions/${sessionId}/events?since=${since}`,
    );
    return body.events;
  }

  /** Server-sent events; falls back to polling when streaming fails. */
  async *streamEvents(
    sessionId: string,
    since: number,
    signal?: AbortSignal,
  ): AsyncGenerator<SessionEvent> {
    let cursor = since;
    try {
      const resp = await this.fetchFn(
        `${this.baseUrl}/sessions/${sessionId}/events?since=${cursor}`,
        { headers: { accept: "text/event-stream" }, signal },
      );
      if (!resp.ok || !resp.body) throw await parseError(resp);
      const reader = resp.body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { value, done } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        const { events, rest } = parseSseChunk(buffer);
        buffer = rest;
        for (const event of events) {
          cursor = event.seq;
          yield event;
        }
      }
    } catch (err) {
      if (signal?.aborted) return;
      // streaming unavailable: degrade to polling
      while (!signal?.aborted) {
        const events = await this.pollEvents(sessionId, cursor);
        for (const event of events) {
          cursor = event.seq;
          yield event;
        }
        await new Promise((resolve) => setTimeout(resolve, 500));
      }
    }
  }
}

/** Split an SSE buffer into complete events plus the unfinished tail. */
export function parseSseChunk(buffer: string): {
  events: SessionEvent[];
  rest: string;
} {
  const events: SessionEvent[] = [];
  const blocks = buffer.split("\n\n");
  const rest = blocks.pop() ?? "";
  for (const block of blocks) {
    const dataLines = block
      .split("\n")
      .filter((line) => line.startsWith("data: "))
      .map((line) => line.slice("data: ".length));
    if (dataLines.length === 0) continue; // keep-alive comment
    events.push(JSON.parse(dataLines.join("\n")) as SessionEvent);
  }
  return { events, rest };
}
