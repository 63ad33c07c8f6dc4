// Wire protocol, version 1: one JSON envelope per TCP line or WebSocket
// text frame, {"body": ..., "protocol_version": 1, "type": "<snake_case>"}.
// Field-by-field schemas live in docs/protocol.md; this module is the
// client-side mirror of those shapes plus encode/decode.

export const PROTOCOL_VERSION = 1;

// ---------------------------------------------------------------- actions

export interface PlayAction {
  type: "play";
  face: number;
  count: number;
  uids: number[];
}

export interface PassAction {
  type: "pass";
}

export interface DeclareAction {
  type: "declare";
  accept: boolean;
}

export interface ExchangeReturnAction {
  type: "exchange_return";
  uids: number[];
}

export type TurnAction = PlayAction | PassAction;
export type WireAction = TurnAction | DeclareAction | ExchangeReturnAction;

/** Stable identity for comparing actions (JSON.stringify key order is
 * insertion order, so normalize explicitly). */
export function actionKey(action: TurnAction): string {
  if (action.type === "pass") return "pass";
  return `play:${action.face}:${action.count}:${action.uids.join(",")}`;
}

// ------------------------------------------------------------------ view

export interface CardInfo {
  uid: number;
  face: number;
  golden: boolean;
}

export interface PizzaInfo {
  opener: number;
  slots_used: number;
  top_face: number | null;
  top_count: number;
  passed: number[];
  last_player_to_play: number | null;
}

/** One seat's complete observable state, as carried by view_update. */
export interface View {
  seat: number;
  shift_number: number;
  phase: string;
  own_hand: CardInfo[];
  hand_sizes: number[];
  pizza: PizzaInfo;
  board: number[];
  roles: string[] | null;
  scores: number[];
  legal: TurnAction[];
  to_act: number | null;
  winner: number | null;
}

// uid layout of the 68-card deck: face N occupies N consecutive uids
// (1..11 ascending), uid 65 is the golden 11, uids 66/67 are the Jokers.
const GOLDEN_UID = 65;
const FIRST_JOKER_UID = 66;

export function faceOfUid(uid: number): number {
  if (uid >= FIRST_JOKER_UID) return 0;
  let face = 1;
  let start = 0;
  while (uid >= start + face) {
    start += face;
    face += 1;
  }
  return face;
}

export function isGolden(uid: number): boolean {
  return uid === GOLDEN_UID;
}

// ------------------------------------------------------------ frame bodies

export interface HelloReply {
  session: string;
  resumed: boolean;
}

export interface SeatInfo {
  kind: "open" | "bot" | "human";
  name?: string;
  connected?: boolean;
}

export interface TableStateBody {
  table_id: string;
  status: "lobby" | "playing" | "finished";
  turn_timer_ms: number;
  rules: Record<string, unknown>;
  seats: SeatInfo[];
}

export interface SeatAssignedBody {
  table_id: string;
  seat: number;
}

export interface ViewUpdateBody {
  table_id: string;
  view: View;
  events: Array<Record<string, unknown>>;
}

export interface YourTurnBody {
  table_id: string;
  seat: number;
  timer_ms: number;
}

export interface SpecialPromptBody {
  table_id: string;
  kind: string;
  timer_ms: number;
}

export interface ExchangePromptBody {
  table_id: string;
  received: number[];
  return_count: number;
  pool: number[];
  timer_ms: number;
}

export interface ActionAcceptedBody {
  table_id: string;
}

export interface RejectedBody {
  code: string;
  detail: string;
}

export interface MatchEndedBody {
  table_id: string;
  winner: number;
  reason: string;
  totals: number[];
}

export type ServerFrame =
  | { type: "hello"; body: HelloReply }
  | { type: "table_state"; body: TableStateBody }
  | { type: "seat_assigned"; body: SeatAssignedBody }
  | { type: "view_update"; body: ViewUpdateBody }
  | { type: "your_turn"; body: YourTurnBody }
  | { type: "special_action_prompt"; body: SpecialPromptBody }
  | { type: "exchange_prompt"; body: ExchangePromptBody }
  | { type: "action_accepted"; body: ActionAcceptedBody }
  | { type: "action_rejected"; body: RejectedBody }
  | { type: "match_ended"; body: MatchEndedBody }
  | { type: "error"; body: RejectedBody }
  | { type: "pong"; body: Record<string, unknown> };

export type ClientFrameType =
  | "hello"
  | "create_table"
  | "join_table"
  | "submit_action"
  | "ping";

export function encodeFrame(type: ClientFrameType, body: object): string {
  return JSON.stringify({ body, protocol_version: PROTOCOL_VERSION, type });
}

export class ProtocolError extends Error {}

export function decodeFrame(line: string): ServerFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new ProtocolError(`not JSON: ${line.slice(0, 80)}`);
  }
  if (typeof raw !== "object" || raw === null) {
    throw new ProtocolError("frame is not an object");
  }
  const frame = raw as { type?: unknown; body?: unknown; protocol_version?: unknown };
  if (frame.protocol_version !== PROTOCOL_VERSION) {
    throw new ProtocolError(`unsupported protocol_version ${frame.protocol_version}`);
  }
  if (typeof frame.type !== "string" || typeof frame.body !== "object" || frame.body === null) {
    throw new ProtocolError("frame needs a type and a body");
  }
  return frame as ServerFrame;
}
