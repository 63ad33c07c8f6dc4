// DOM wiring. Single UI thread: socket frames fold into the model in
// arrival order (client.ts) and every render below is a pure function of
// that model. The only state that survives a reload is the session token,
// kept in sessionStorage for the reconnect flow.

import { GameClient, TokenStore } from "./client.js";
import {
  stagedExchangeReturn,
  stagedTurnAction,
  TableModel,
  toggleSelected,
} from "./model.js";
import { faceOfUid, isGolden, TurnAction } from "./protocol.js";
import { WsTransport } from "./transport.js";

const TOKEN_KEY = "chefshat.session";

const sessionTokens: TokenStore = {
  get: () => sessionStorage.getItem(TOKEN_KEY),
  set: (token) => sessionStorage.setItem(TOKEN_KEY, token),
};

const ROLE_BADGES: Record<string, string> = {
  chef: "\u{1F468}‍\u{1F373} chef",
  sous_chef: "\u{1F9D1}‍\u{1F373} sous-chef",
  waiter: "\u{1F380} waiter",
  dishwasher: "\u{1F9FD} dishwasher",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className !== undefined) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

let client: GameClient | null = null;
let timerHandle: number | null = null;

function connect(): void {
  const status = byId<HTMLSpanElement>("conn-status");
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  const transport = new WsTransport(`${scheme}://${location.host}/`, async () => {
    status.textContent = "connected";
    try {
      const hello = await client!.hello();
      status.textContent = hello.resumed ? "connected (session resumed)" : "connected";
      byId<HTMLButtonElement>("create").disabled = false;
      byId<HTMLButtonElement>("join").disabled = false;
      render();
    } catch (err) {
      status.textContent = `handshake failed: ${err}`;
    }
  });
  transport.onClose(() => {
    status.textContent = "disconnected - retrying in 2 s";
    window.setTimeout(connect, 2000);
  });
  client = new GameClient(transport, sessionTokens);
  client.onChange = render;
}

async function createTable(): Promise<void> {
  const bots = byId<HTMLSelectElement>("bot-count").value;
  const names = ["random", "greedy", "conservative"];
  const lineup: Record<string, string> = {};
  for (let i = 0; i < Number(bots); i++) lineup[String(3 - i)] = names[i % names.length];
  const table = await client!.createTable({ bots: lineup });
  await client!.joinTable(table.table_id);
  render();
}

async function joinTable(): Promise<void> {
  const id = byId<HTMLInputElement>("table-id").value.trim();
  if (id.length === 0) return;
  await client!.joinTable(id);
  render();
}

async function submitTurn(action: TurnAction): Promise<void> {
  const model = client!.model;
  if (model.inFlight) return;
  await client!.submit(action);
  render();
}

function cardLabel(uid: number): string {
  const face = faceOfUid(uid);
  if (face === 0) return "J";
  return isGolden(uid) ? `${face}★` : String(face);
}

function renderBoard(model: TableModel, root: HTMLElement): void {
  root.replaceChildren();
  const board = model.view?.board ?? [];
  for (let slot = 0; slot < 11; slot++) {
    const uid = board[slot];
    const cell =
      uid === undefined
        ? el("div", "slot empty")
        : el("div", `slot filled${faceOfUid(uid) === 0 ? " joker" : ""}`, cardLabel(uid));
    root.appendChild(cell);
  }
}

function renderSeats(model: TableModel, root: HTMLElement): void {
  root.replaceChildren();
  const view = model.view;
  for (let seat = 0; seat < 4; seat++) {
    const info = model.seats[seat];
    const box = el("div", "seat" + (view !== null && view.to_act === seat ? " acting" : ""));
    const name =
      info === undefined || info.kind === "open"
        ? "open"
        : info.kind === "bot"
          ? `bot: ${info.name}`
          : seat === model.seat
            ? "you"
            : "human";
    box.appendChild(el("div", "seat-name", `seat ${seat} - ${name}`));
    if (view !== null) {
      const role = view.roles?.[seat];
      if (role !== undefined && ROLE_BADGES[role] !== undefined) {
        box.appendChild(el("div", `badge role-${role}`, ROLE_BADGES[role]));
      }
      box.appendChild(el("div", "seat-meta", `${view.hand_sizes[seat]} cards`));
      box.appendChild(el("div", "seat-meta", `${view.scores[seat]} pts`));
      if (view.pizza.passed.includes(seat)) box.appendChild(el("div", "seat-meta passed", "passed"));
    }
    root.appendChild(box);
  }
}

function renderHand(model: TableModel, root: HTMLElement): void {
  root.replaceChildren();
  const view = model.view;
  if (view === null) return;
  for (const card of view.own_hand) {
    const picked = model.selected.includes(card.uid);
    const button = el(
      "button",
      `card${picked ? " picked" : ""}${card.face === 0 ? " joker" : ""}${card.golden ? " golden" : ""}`,
      card.face === 0 ? "J" : card.golden ? `${card.face}★` : String(card.face),
    );
    button.onclick = () => {
      toggleSelected(model, card.uid);
      render();
    };
    root.appendChild(button);
  }
}

function renderPrompt(model: TableModel, root: HTMLElement): void {
  root.replaceChildren();
  const prompt = model.prompt;
  const view = model.view;
  if (model.ended !== null) {
    const winner = model.ended.winner;
    root.appendChild(
      el(
        "div",
        "banner",
        `Match over - seat ${winner}${winner === model.seat ? " (you!)" : ""} wins by ${model.ended.reason}. Totals: ${model.ended.totals.join(" / ")}`,
      ),
    );
    return;
  }
  if (prompt === null || view === null) {
    root.appendChild(el("div", "hint", model.view === null ? "" : "Waiting for the table."));
    return;
  }

  if (prompt.kind === "turn") {
    const staging = stagedTurnAction(view, model.selected);
    const submit = el("button", "primary", "Submit play");
    submit.disabled = staging.action === null || model.inFlight;
    submit.title = staging.hint;
    if (staging.action !== null) {
      const action = staging.action;
      submit.onclick = () => void submitTurn(action);
    }
    const passLegal = view.legal.some((a) => a.type === "pass");
    const pass = el("button", "", "Pass");
    pass.disabled = !passLegal || model.inFlight;
    pass.title = passLegal ? "Sit this pizza out." : "The opener must play.";
    pass.onclick = () => void submitTurn({ type: "pass" });
    root.appendChild(el("div", "hint", staging.hint));
    root.appendChild(submit);
    root.appendChild(pass);
  } else if (prompt.kind === "special") {
    root.appendChild(
      el("div", "hint", `Two Jokers! Declare ${prompt.special.replace(/_/g, " ")}?`),
    );
    const yes = el("button", "primary", "Declare it");
    yes.disabled = model.inFlight;
    yes.onclick = () => void client!.submit({ type: "declare", accept: true });
    const no = el("button", "", "Keep quiet");
    no.disabled = model.inFlight;
    no.onclick = () => void client!.submit({ type: "declare", accept: false });
    root.appendChild(yes);
    root.appendChild(no);
  } else {
    const staging = stagedExchangeReturn(prompt, model.selected);
    root.appendChild(
      el(
        "div",
        "hint",
        `You received ${prompt.received.length} card(s); pick ${prompt.returnCount} to give back. ${staging.hint}`,
      ),
    );
    const give = el("button", "primary", "Give back");
    give.disabled = staging.action === null || model.inFlight;
    give.title = staging.hint;
    if (staging.action !== null) {
      const action = staging.action;
      give.onclick = () => void client!.submit(action);
    }
    root.appendChild(give);
  }

  if (prompt.timerMs > 0) {
    const left = Math.max(0, prompt.timerMs - (Date.now() - model.promptAtMs));
    root.appendChild(el("span", "timer", ` ${(left / 1000).toFixed(1)} s`));
  }
  if (model.lastRejection !== null) {
    root.appendChild(el("div", "rejection", `Server said no: ${model.lastRejection}`));
  }
}

function render(): void {
  if (client === null) return;
  const model = client.model;
  byId<HTMLDivElement>("lobby").hidden = model.seat !== null;
  byId<HTMLDivElement>("table").hidden = model.seat === null;
  if (model.seat === null) return;

  const view = model.view;
  byId<HTMLSpanElement>("table-title").textContent =
    `${model.tableId} - seat ${model.seat} - ${model.status}` +
    (view === null ? "" : ` - shift ${view.shift_number}`);
  renderSeats(model, byId("seats"));
  renderBoard(model, byId("board"));
  const pizza = view?.pizza;
  byId<HTMLDivElement>("board-meta").textContent =
    pizza === undefined || pizza.top_face === null
      ? "Board open: any face starts the pizza."
      : `Top: ${pizza.top_count} x face ${pizza.top_face}; beat it with more copies of a rarer face.`;
  renderHand(model, byId("hand"));
  renderPrompt(model, byId("prompt"));

  const feed = byId<HTMLUListElement>("feed");
  feed.replaceChildren(...model.feed.slice(-12).map((line) => el("li", "", line)));

  if (timerHandle !== null) window.clearInterval(timerHandle);
  timerHandle = null;
  if (model.prompt !== null && model.prompt.timerMs > 0) {
    timerHandle = window.setInterval(() => renderPrompt(model, byId("prompt")), 250);
  }
}

export function start(): void {
  byId<HTMLButtonElement>("create").onclick = () => void createTable();
  byId<HTMLButtonElement>("join").onclick = () => void joinTable();
  connect();
}

start();
