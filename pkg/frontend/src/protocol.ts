// Wire protocol mirror: one JSON object per WebSocket text frame.

export type ClientMessage =
    | { type: "init"; seed?: number; temperature?: number }
    | { type: "press"; button: number; t_ms?: number }
    | { type: "release"; button: number; t_ms?: number }
    | { type: "lookahead" }
    | { type: "reset"; t_ms?: number }
    | { type: "set_temperature"; temperature: number };

export type ServerMessage =
    | { type: "ready"; session_id: string }
    | { type: "note_on"; key: number; button: number; t_ms: number }
    | { type: "note_off"; key: number; button: number; t_ms: number }
    | { type: "lookahead_result"; matrix: number[][] }
    | { type: "error"; code: string; message: string };

const SERVER_TYPES = new Set([
    "ready", "note_on", "note_off", "lookahead_result", "error",
]);

export function encode(msg: ClientMessage): string {
    if (("button" in msg) && (msg.button < 0 || msg.button > 7 || !Number.isInteger(msg.button))) {
        throw new Error(`button out of range: ${msg.button}`);
    }
    return JSON.stringify(msg);
}

export function decode(raw: string): ServerMessage {
    let parsed: unknown;
    try {
        parsed = JSON.parse(raw);
    } catch {
        throw new Error(`unparseable server frame: ${raw.slice(0, 80)}`);
    }
    const msg = parsed as ServerMessage;
    if (typeof msg !== "object" || msg === null || !SERVER_TYPES.has(msg.type)) {
        throw new Error(`unknown server message: ${raw.slice(0, 80)}`);
    }
    return msg;
}
