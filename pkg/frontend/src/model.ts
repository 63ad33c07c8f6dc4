// UI table model. All truth comes from the server's frames; renders are
// pure functions of this state. The one invariant that matters: every
// submit affordance the UI enables is derived from view.legal alone, so a
// human can never send an action the server would reject for legality.

import {
  actionKey,
  CardInfo,
  ExchangePromptBody,
  ExchangeReturnAction,
  MatchEndedBody,
  SeatInfo,
  ServerFrame,
  TurnAction,
  View,
} from "./protocol.js";

export type Prompt =
  | { kind: "turn"; timerMs: number }
  | { kind: "special"; special: string; timerMs: number }
  | { kind: "exchange"; received: number[]; returnCount: number; pool: number[]; timerMs: number };

export interface TableModel {
  tableId: string | null;
  status: "lobby" | "playing" | "finished";
  seat: number | null;
  seats: SeatInfo[];
  turnTimerMs: number;
  view: View | null;
  prompt: Prompt | null;
  /** Timer budget display anchors to the prompt's arrival; the budget itself
   * is always the server-sent timer_ms, never a locally computed deadline. */
  promptAtMs: number;
  selected: number[];
  inFlight: boolean;
  ended: MatchEndedBody | null;
  feed: string[];
  lastRejection: string | null;
}

export function emptyModel(): TableModel {
  return {
    tableId: null,
    status: "lobby",
    seat: null,
    seats: [],
    turnTimerMs: 0,
    view: null,
    prompt: null,
    promptAtMs: 0,
    selected: [],
    inFlight: false,
    ended: null,
    feed: [],
    lastRejection: null,
  };
}

// ------------------------------------------------------------- affordances

/** (face, uids) pairs from the own hand: faces descending, uids ascending.
 * This is the staging space the hand UI offers; legality is decided
 * elsewhere, purely by membership in view.legal. */
export function faceGroups(hand: CardInfo[]): Array<[number, number[]]> {
  const byFace = new Map<number, number[]>();
  for (const card of hand) {
    const uids = byFace.get(card.face);
    if (uids === undefined) byFace.set(card.face, [card.uid]);
    else uids.push(card.uid);
  }
  const faces = [...byFace.keys()].sort((a, b) => b - a);
  return faces.map((face) => [face, byFace.get(face)!.sort((a, b) => a - b)]);
}

/** Every staging the hand UI could reach: each face group at each count,
 * spending the lowest uids first, plus Pass. Deliberately unfiltered. */
export function candidateStagings(view: View): TurnAction[] {
  const out: TurnAction[] = [];
  for (const [face, uids] of faceGroups(view.own_hand)) {
    for (let count = 1; count <= uids.length; count++) {
      out.push({ type: "play", face, count, uids: uids.slice(0, count) });
    }
  }
  out.push({ type: "pass" });
  return out;
}

/** The submit affordances the UI enables: exactly the candidate stagings
 * that appear in view.legal. Order mirrors the server's canonical order
 * (faces descending, counts ascending, Pass last), so this should compare
 * equal to view.legal itself - which is the point. */
export function enabledActions(view: View): TurnAction[] {
  const allowed = new Set(view.legal.map(actionKey));
  return candidateStagings(view).filter((action) => allowed.has(actionKey(action)));
}

export interface Staging {
  /** The frame Submit would send; null means Submit is disabled. */
  action: TurnAction | null;
  /** Tooltip text: what the selection is, or why it cannot be sent. */
  hint: string;
}

/** What the Submit button does for the current card selection. The returned
 * action is the matching member of view.legal (copies of a face are
 * interchangeable, so the canonical member stands in for any staged copies);
 * the hint explains disabled states in board terms but never overrides the
 * membership test. */
export function stagedTurnAction(view: View, selected: number[]): Staging {
  if (view.legal.length === 0) {
    return { action: null, hint: "Waiting for your turn." };
  }
  if (selected.length === 0) {
    return { action: null, hint: "Select copies of one ingredient, or pass." };
  }
  const byUid = new Map(view.own_hand.map((c) => [c.uid, c]));
  const faces = new Set<number>();
  for (const uid of selected) {
    const card = byUid.get(uid);
    if (card === undefined) {
      return { action: null, hint: "Selection includes a card you no longer hold." };
    }
    faces.add(card.face);
  }
  if (faces.size > 1) {
    return { action: null, hint: "One ingredient at a time: all cards must share a face." };
  }
  const face = faces.values().next().value as number;
  const count = selected.length;
  const member = view.legal.find(
    (a): a is Extract<TurnAction, { type: "play" }> =>
      a.type === "play" && a.face === face && a.count === count,
  );
  if (member !== undefined) {
    return { action: member, hint: `Play ${count} x face ${face}.` };
  }
  return { action: null, hint: disabledReason(view, face, count) };
}

/** Display-only explanation for a disabled Submit; gating stays with the
 * view.legal membership test above. */
function disabledReason(view: View, face: number, count: number): string {
  const pizza = view.pizza;
  if (pizza.slots_used + count > 11) {
    return "Not enough empty slots on the board.";
  }
  if (pizza.top_face !== null && face >= pizza.top_face) {
    return `Face ${face} is not rarer than the face ${pizza.top_face} on top.`;
  }
  if (pizza.top_face !== null && count < pizza.top_count) {
    return `Needs at least ${pizza.top_count} copies to follow.`;
  }
  return "That play is not available right now.";
}

/** Exchange picker: submittable only with exactly return_count cards, all
 * from the offered pool. */
export function stagedExchangeReturn(
  prompt: ExchangePromptBody | { returnCount: number; pool: number[] },
  selected: number[],
): { action: ExchangeReturnAction | null; hint: string } {
  const returnCount = "returnCount" in prompt ? prompt.returnCount : prompt.return_count;
  const pool = prompt.pool;
  if (selected.some((uid) => !pool.includes(uid))) {
    return { action: null, hint: "Pick only from your current cards." };
  }
  if (selected.length !== returnCount) {
    return {
      action: null,
      hint: `Pick exactly ${returnCount} card${returnCount === 1 ? "" : "s"} to give back (${selected.length} selected).`,
    };
  }
  return {
    action: { type: "exchange_return", uids: [...selected].sort((a, b) => a - b) },
    hint: "Give these back.",
  };
}

export function toggleSelected(model: TableModel, uid: number): void {
  const at = model.selected.indexOf(uid);
  if (at >= 0) model.selected.splice(at, 1);
  else model.selected.push(uid);
}

// ---------------------------------------------------------------- reducer

function seatLabel(seats: SeatInfo[], seat: number): string {
  const info = seats[seat];
  if (info === undefined) return `seat ${seat}`;
  if (info.kind === "bot") return `seat ${seat} (${info.name})`;
  return `seat ${seat}`;
}

function describeEvent(model: TableModel, event: Record<string, unknown>): string | null {
  const kind = event["kind"];
  const payload = (event["payload"] ?? {}) as Record<string, unknown>;
  switch (kind) {
    case "shift_started":
      return `Shift ${payload["shift"]} begins.`;
    case "special_action_declared":
      return "declarer" in payload
        ? `${seatLabel(model.seats, payload["declarer"] as number)} declares ${payload["kind"]}!`
        : "No special action declared.";
    case "pizza_opened":
      return `${seatLabel(model.seats, payload["opener"] as number)} opens a pizza.`;
    case "cards_played":
      return `${seatLabel(model.seats, payload["seat"] as number)} plays ${payload["count"]} x face ${payload["face"]}${"auto" in payload ? " (auto)" : ""}.`;
    case "passed":
      return `${seatLabel(model.seats, payload["seat"] as number)} passes${"auto" in payload ? " (auto)" : ""}.`;
    case "pizza_done":
      return "Pizza done.";
    case "player_finished":
      return `${seatLabel(model.seats, payload["seat"] as number)} finishes #${payload["place"]}.`;
    case "roles_assigned":
      return `Roles: ${(payload["roles"] as string[]).join(", ")}.`;
    case "scores_updated":
      return `Scores: ${(payload["totals"] as number[]).join(" / ")}.`;
    case "match_ended":
      return `Match over: ${seatLabel(model.seats, payload["winner"] as number)} wins (${payload["reason"]}).`;
    default:
      return null;
  }
}

/** Fold one server frame into the model, in arrival order. */
export function applyFrame(model: TableModel, frame: ServerFrame, nowMs: number): void {
  switch (frame.type) {
    case "table_state": {
      model.tableId = frame.body.table_id;
      model.status = frame.body.status;
      model.seats = frame.body.seats;
      model.turnTimerMs = frame.body.turn_timer_ms;
      return;
    }
    case "seat_assigned": {
      model.tableId = frame.body.table_id;
      model.seat = frame.body.seat;
      return;
    }
    case "view_update": {
      model.view = frame.body.view;
      model.status = model.ended === null ? "playing" : "finished";
      for (const event of frame.body.events) {
        const line = describeEvent(model, event);
        if (line !== null) model.feed.push(line);
      }
      // a turn prompt answered by the timeout fallback is gone for good;
      // the fresh view is the resync point
      if (model.prompt?.kind === "turn" && frame.body.view.to_act !== model.seat) {
        model.prompt = null;
        model.selected = [];
      }
      return;
    }
    case "your_turn": {
      model.prompt = { kind: "turn", timerMs: frame.body.timer_ms };
      model.promptAtMs = nowMs;
      model.selected = [];
      model.lastRejection = null;
      return;
    }
    case "special_action_prompt": {
      model.prompt = { kind: "special", special: frame.body.kind, timerMs: frame.body.timer_ms };
      model.promptAtMs = nowMs;
      model.selected = [];
      model.lastRejection = null;
      return;
    }
    case "exchange_prompt": {
      model.prompt = {
        kind: "exchange",
        received: frame.body.received,
        returnCount: frame.body.return_count,
        pool: frame.body.pool,
        timerMs: frame.body.timer_ms,
      };
      model.promptAtMs = nowMs;
      model.selected = [];
      model.lastRejection = null;
      return;
    }
    case "action_accepted": {
      model.inFlight = false;
      model.prompt = null;
      model.selected = [];
      return;
    }
    case "action_rejected": {
      model.inFlight = false;
      model.lastRejection = `${frame.body.code}: ${frame.body.detail}`;
      return;
    }
    case "match_ended": {
      model.ended = frame.body;
      model.status = "finished";
      model.prompt = null;
      model.selected = [];
      return;
    }
    case "hello":
    case "error":
    case "pong":
      return;
  }
}
