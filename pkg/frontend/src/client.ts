// Session-level client: greets, creates/joins tables, and submits actions
// with a single-flight guard (at most one unanswered submit_action per
// prompt). All server frames fold into the TableModel in arrival order.

import { applyFrame, emptyModel, TableModel } from "./model.js";
import {
  decodeFrame,
  encodeFrame,
  HelloReply,
  ProtocolError,
  SeatAssignedBody,
  ServerFrame,
  TableStateBody,
  WireAction,
} from "./protocol.js";
import { Transport } from "./transport.js";

/** Where the session token survives reloads; sessionStorage in the browser,
 * a plain object in tests. */
export interface TokenStore {
  get(): string | null;
  set(token: string): void;
}

export type SubmitOutcome = "accepted" | "rejected";

interface Waiter {
  type: string;
  resolve: (frame: ServerFrame) => void;
  reject: (err: Error) => void;
}

export interface CreateTableOptions {
  rules?: Record<string, unknown>;
  turn_timer_ms?: number;
  seed?: number;
  bots?: Record<string, string> | number[];
}

export class GameClient {
  readonly model: TableModel = emptyModel();
  onChange: (() => void) | null = null;
  onPrompt: (() => void) | null = null;
  private waiters: Waiter[] = [];
  private closed = false;

  constructor(
    private transport: Transport,
    private tokens: TokenStore,
  ) {
    transport.onFrame((line) => this.receive(line));
    transport.onClose(() => this.fail(new Error("connection closed")));
  }

  /** Greet (resuming a stored session when one exists) and store the token
   * the server hands back. */
  async hello(): Promise<HelloReply> {
    const token = this.tokens.get();
    this.transport.send(encodeFrame("hello", token === null ? {} : { token }));
    const frame = await this.expect("hello");
    const reply = frame.body as HelloReply;
    this.tokens.set(reply.session);
    return reply;
  }

  async createTable(options: CreateTableOptions = {}): Promise<TableStateBody> {
    this.transport.send(encodeFrame("create_table", options));
    const frame = await this.expect("table_state");
    return frame.body as TableStateBody;
  }

  async joinTable(tableId: string, seat?: number): Promise<SeatAssignedBody> {
    const body: Record<string, unknown> = { table_id: tableId };
    if (seat !== undefined) body["seat"] = seat;
    this.transport.send(encodeFrame("join_table", body));
    const frame = await this.expect("seat_assigned");
    return frame.body as SeatAssignedBody;
  }

  /** Send one action for the open prompt. Refuses while a previous submit
   * is unanswered; resolves on the server's verdict. */
  async submit(action: WireAction): Promise<SubmitOutcome> {
    if (this.model.inFlight) {
      throw new Error("a submit is already in flight");
    }
    if (this.model.tableId === null) {
      throw new Error("not at a table");
    }
    this.model.inFlight = true;
    this.transport.send(
      encodeFrame("submit_action", { table_id: this.model.tableId, action }),
    );
    const frame = await this.expect("action_accepted", "action_rejected");
    return frame.type === "action_accepted" ? "accepted" : "rejected";
  }

  async ping(): Promise<void> {
    this.transport.send(encodeFrame("ping", { nonce: Date.now() }));
    await this.expect("pong");
  }

  close(): void {
    this.closed = true;
    this.transport.close();
  }

  private expect(...types: string[]): Promise<ServerFrame> {
    return new Promise((resolve, reject) => {
      for (const type of types) this.waiters.push({ type, resolve, reject });
    });
  }

  private receive(line: string): void {
    let frame: ServerFrame;
    try {
      frame = decodeFrame(line);
    } catch (err) {
      if (err instanceof ProtocolError) return; // not ours to crash the UI over
      throw err;
    }
    applyFrame(this.model, frame, Date.now());

    const at = this.waiters.findIndex((w) => w.type === frame.type);
    if (at >= 0) {
      const waiter = this.waiters[at];
      // a resolved waiter retires its alternatives (accepted vs rejected)
      this.waiters = this.waiters.filter(
        (w) => w.resolve !== waiter.resolve,
      );
      waiter.resolve(frame);
    } else if (frame.type === "error") {
      // an unsolicited error answers whichever request is pending
      const pending = this.waiters.shift();
      pending?.reject(new Error(`${frame.body.code}: ${frame.body.detail}`));
    }

    if (frame.type === "your_turn" || frame.type === "special_action_prompt" || frame.type === "exchange_prompt") {
      this.onPrompt?.();
    }
    this.onChange?.();
  }

  private fail(err: Error): void {
    if (this.closed) return;
    const pending = this.waiters;
    this.waiters = [];
    for (const waiter of pending) waiter.reject(err);
  }
}
