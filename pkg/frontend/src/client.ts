// WebSocket client with exponential-backoff reconnect. Sessions are not
// persistent server-side, so every (re)connect sends a fresh init.

import { ClientMessage, ServerMessage, decode, encode } from "./protocol.js";

export interface WebSocketLike {
    send(data: string): void;
    close(): void;
    onopen: ((ev?: unknown) => void) | null;
    onmessage: ((ev: { data: unknown }) => void) | null;
    onclose: ((ev?: unknown) => void) | null;
    onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = () => WebSocketLike;

export interface ClientOptions {
    seed?: number;
    temperature?: number;
    maxBackoffMs?: number;
    scheduler?: (fn: () => void, ms: number) => void;
}

export class GenieClient {
    private ws: WebSocketLike | null = null;
    private backoffMs = 250;
    private handlers: ((msg: ServerMessage) => void)[] = [];
    private statusHandlers: ((status: "open" | "closed") => void)[] = [];
    private closed = false;
    private readonly schedule: (fn: () => void, ms: number) => void;

    constructor(private factory: SocketFactory, private options: ClientOptions = {}) {
        this.schedule = options.scheduler ?? ((fn, ms) => setTimeout(fn, ms));
    }

    connect(): void {
        this.closed = false;
        const ws = this.factory();
        this.ws = ws;
        ws.onopen = () => {
            this.backoffMs = 250;
            for (const h of this.statusHandlers) h("open");
            this.send({
                type: "init",
                seed: this.options.seed ?? Math.floor(Math.random() * 2 ** 31),
                temperature: this.options.temperature ?? 0.25,
            });
        };
        ws.onmessage = (ev) => {
            let msg: ServerMessage;
            try {
                msg = decode(String(ev.data));
            } catch {
                return; // junk frame: drop, keep the connection
            }
            for (const h of this.handlers) h(msg);
        };
        ws.onclose = () => {
            this.ws = null;
            for (const h of this.statusHandlers) h("closed");
            if (this.closed) return;
            const delay = this.backoffMs;
            this.backoffMs = Math.min(this.backoffMs * 2,
                                      this.options.maxBackoffMs ?? 10_000);
            this.schedule(() => this.connect(), delay);
        };
        ws.onerror = () => { /* onclose follows and handles retry */ };
    }

    close(): void {
        this.closed = true;
        this.ws?.close();
    }

    onMessage(handler: (msg: ServerMessage) => void): void {
        this.handlers.push(handler);
    }

    onStatus(handler: (status: "open" | "closed") => void): void {
        this.statusHandlers.push(handler);
    }

    send(msg: ClientMessage): boolean {
        if (!this.ws) return false;
        this.ws.send(encode(msg));
        return true;
    }

    press(button: number, t_ms: number): boolean {
        return this.send({ type: "press", button, t_ms });
    }

    release(button: number, t_ms: number): boolean {
        return this.send({ type: "release", button, t_ms });
    }

    lookahead(): boolean {
        return this.send({ type: "lookahead" });
    }

    reset(t_ms: number): boolean {
        return this.send({ type: "reset", t_ms });
    }

    setTemperature(temperature: number): boolean {
        return this.send({ type: "set_temperature", temperature });
    }
}
