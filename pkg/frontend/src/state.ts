// UI state reconciliation: pressed flags mirror unreleased presses, the
// sounding map mirrors the server's note_on/note_off stream one-to-one.

import type { ServerMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export class UiState {
    connection: ConnectionStatus = "connecting";
    sessionId: string | null = null;
    pressed: boolean[] = new Array(8).fill(false);
    sounding = new Map<number, number>(); // key -> button
    lookahead: number[][] | null = null;
    lookaheadNotice: string | null = null;
    temperature = 0.25;
    lastError: string | null = null;

    localPress(button: number): void {
        this.pressed[button] = true;
    }

    localRelease(button: number): void {
        this.pressed[button] = false;
    }

    applyServer(msg: ServerMessage): void {
        switch (msg.type) {
            case "ready":
                this.sessionId = msg.session_id;
                break;
            case "note_on":
                this.sounding.set(msg.key, msg.button);
                break;
            case "note_off":
                this.sounding.delete(msg.key);
                break;
            case "lookahead_result":
                this.lookahead = msg.matrix;
                this.lookaheadNotice = null;
                break;
            case "error":
                if (msg.code === "lookahead_unsupported") {
                    this.lookahead = null;
                    this.lookaheadNotice =
                        "lookahead unavailable for this model (time-delta features)";
                } else {
                    this.lastError = `${msg.code}: ${msg.message}`;
                }
                break;
        }
    }

    pressedCount(): number {
        return this.pressed.filter(Boolean).length;
    }
}
