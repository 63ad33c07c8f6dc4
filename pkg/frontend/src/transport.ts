// A transport carries one JSON envelope per message in each direction.
// Injectable so the client logic runs identically over a browser WebSocket
// or the newline-delimited TCP stream the tests use.

export interface Transport {
  send(frame: string): void;
  onFrame(handler: (frame: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

/** Browser transport: one envelope per WebSocket text frame. */
export class WsTransport implements Transport {
  private socket: WebSocket;
  private frameHandler: ((frame: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  constructor(url: string, onOpen: () => void) {
    this.socket = new WebSocket(url);
    this.socket.onopen = onOpen;
    this.socket.onmessage = (event) => {
      if (typeof event.data === "string") this.frameHandler?.(event.data);
    };
    this.socket.onclose = () => this.closeHandler?.();
    this.socket.onerror = () => this.closeHandler?.();
  }

  send(frame: string): void {
    this.socket.send(frame);
  }

  onFrame(handler: (frame: string) => void): void {
    this.frameHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.socket.onclose = null;
    this.socket.close();
  }
}
