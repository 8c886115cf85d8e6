// Full loop against a live service on loopback: scripted key events drive
// the client; note_on handling must reach the synth within the latency
// budget; lookahead renders on plain checkpoints and degrades to a notice
// on time-delta checkpoints.

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { performance } from "node:perf_hooks";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { WebSocket as NodeWebSocket } from "ws";

import { GenieClient, WebSocketLike } from "../src/client.js";
import { heatmapCells } from "../src/heatmap.js";
import { InputTracker } from "../src/input.js";
import type { ServerMessage } from "../src/protocol.js";
import { Synth } from "../src/synth.js";
import { UiState } from "../src/state.js";

const PLAIN_PORT = 8891;
const DT_PORT = 8892;

let workDir: string;
const servers: ChildProcess[] = [];

function makeCheckpoints(dir: string): void {
    const script = `
import sys
from genie.checkpoint import save_checkpoint
from genie.model import GenieModel, ModelConfig
out = sys.argv[1]
save_checkpoint(GenieModel(ModelConfig(hidden_size=8, num_layers=2,
    quantizer="iqae", window_n=16), seed=1), out + "/plain.ckpt")
save_checkpoint(GenieModel(ModelConfig(hidden_size=8, num_layers=2,
    quantizer="iqae", use_dt=True, window_n=16), seed=2), out + "/dt.ckpt")
`;
    execFileSync("python3", ["-c", script, dir], { stdio: "inherit" });
}

async function waitHealthy(port: number, timeoutMs = 30_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        try {
            const res = await fetch(`http://127.0.0.1:${port}/healthz`);
            if (res.ok) return;
        } catch {
            // not up yet
        }
        await new Promise((r) => setTimeout(r, 200));
    }
    throw new Error(`service on :${port} never became healthy`);
}

function startServer(ckpt: string, port: number): ChildProcess {
    const proc = spawn("genie",
        ["serve", "--ckpt", ckpt, "--bind", `127.0.0.1:${port}`],
        { stdio: "ignore" });
    servers.push(proc);
    return proc;
}

function wsFactory(port: number): () => WebSocketLike {
    return () => {
        const ws = new NodeWebSocket(`ws://127.0.0.1:${port}/ws`);
        const like: WebSocketLike = {
            send: (data) => ws.send(data),
            close: () => ws.close(),
            onopen: null, onmessage: null, onclose: null, onerror: null,
        };
        ws.on("open", () => like.onopen?.());
        ws.on("message", (data) => like.onmessage?.({ data: String(data) }));
        ws.on("close", () => like.onclose?.());
        ws.on("error", () => like.onerror?.());
        return like;
    };
}

function connectedClient(port: number): Promise<{
    client: GenieClient; state: UiState; messages: ServerMessage[];
}> {
    return new Promise((resolve) => {
        const state = new UiState();
        const messages: ServerMessage[] = [];
        const client = new GenieClient(wsFactory(port), { seed: 5, temperature: 0.25 });
        client.onMessage((msg) => {
            state.applyServer(msg);
            messages.push(msg);
            if (msg.type === "ready") resolve({ client, state, messages });
        });
        client.connect();
    });
}

class FakeParam {
    value = 0;
    setValueAtTime() { return this; }
    linearRampToValueAtTime() { return this; }
    exponentialRampToValueAtTime() { return this; }
}

class FakeNode { connect() { return this; } }

class FakeAudioContext {
    currentTime = 0;
    destination = new FakeNode();
    createOscillator() {
        return Object.assign(new FakeNode(),
            { type: "", frequency: new FakeParam(), start() {}, stop() {} });
    }
    createGain() { return Object.assign(new FakeNode(), { gain: new FakeParam() }); }
    createBiquadFilter() {
        return Object.assign(new FakeNode(),
            { type: "", frequency: new FakeParam(), Q: new FakeParam() });
    }
}

beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "genie-ui-"));
    makeCheckpoints(workDir);
    startServer(join(workDir, "plain.ckpt"), PLAIN_PORT);
    startServer(join(workDir, "dt.ckpt"), DT_PORT);
    await Promise.all([waitHealthy(PLAIN_PORT), waitHealthy(DT_PORT)]);
}, 60_000);

afterAll(() => {
    for (const proc of servers) proc.kill("SIGTERM");
    rmSync(workDir, { recursive: true, force: true });
});

describe("live service loop", () => {
    it("scripted key events produce synth note-ons within 60 ms locally",
       async () => {
        const { client, state } = await connectedClient(PLAIN_PORT);
        const tracker = new InputTracker();
        const synth = new Synth(new FakeAudioContext() as never);
        const latencies: number[] = [];

        const keysScript = ["a", "f", "j", ";", "d", "k", "s", "l"];
        for (const key of keysScript) {
            const sentAt = performance.now();
            const noteOn = new Promise<void>((resolve) => {
                const handler = (msg: ServerMessage) => {
                    if (msg.type === "note_on") {
                        synth.noteOn(msg.key);
                        latencies.push(performance.now() - sentAt);
                        resolve();
                    }
                };
                client.onMessage(handler);
            });
            const event = tracker.keyDown({ key }, sentAt);
            expect(event).not.toBeNull();
            state.localPress(event!.button);
            client.press(event!.button, event!.t_ms);
            await noteOn;
            const up = tracker.keyUp({ key }, performance.now());
            state.localRelease(up!.button);
            client.release(up!.button, up!.t_ms);
        }

        await new Promise((r) => setTimeout(r, 100));
        const sorted = [...latencies].sort((a, b) => a - b);
        const p50 = sorted[Math.floor(sorted.length / 2)];
        expect(p50).toBeLessThan(60);
        expect(state.sounding.size).toBe(0); // all released server-side
        client.close();
    }, 30_000);

    it("renders the lookahead heatmap for a plain checkpoint", async () => {
        const { client, state } = await connectedClient(PLAIN_PORT);
        const result = new Promise<void>((resolve) => {
            client.onMessage((msg) => {
                if (msg.type === "lookahead_result") resolve();
            });
        });
        client.lookahead();
        await result;
        expect(state.lookahead).not.toBeNull();
        expect(state.lookahead!.length).toBe(8);
        const cells = heatmapCells(state.lookahead!, 704, 128);
        expect(cells.length).toBeGreaterThan(0);
        expect(state.lookaheadNotice).toBeNull();
        client.close();
    }, 30_000);

    it("degrades gracefully on a time-delta checkpoint", async () => {
        const { client, state } = await connectedClient(DT_PORT);
        const errored = new Promise<void>((resolve) => {
            client.onMessage((msg) => {
                if (msg.type === "error") resolve();
            });
        });
        client.lookahead();
        await errored;
        expect(state.lookahead).toBeNull();
        expect(state.lookaheadNotice).toMatch(/lookahead/);
        expect(state.lastError).toBeNull(); // handled as a notice, not an error

        // the instrument still plays
        const noteOn = new Promise<ServerMessage>((resolve) => {
            client.onMessage((msg) => {
                if (msg.type === "note_on") resolve(msg);
            });
        });
        client.press(3, performance.now());
        const msg = await noteOn;
        expect(msg.type).toBe("note_on");
        client.close();
    }, 30_000);

    it("state reconciliation: sounding mirrors the server note stream",
       async () => {
        const { client, state } = await connectedClient(PLAIN_PORT);
        const keysSeen = new Set<number>();
        const done = new Promise<void>((resolve) => {
            let ons = 0;
            client.onMessage((msg) => {
                if (msg.type === "note_on") {
                    keysSeen.add(msg.key); // two buttons may sample one key
                    if (++ons === 3) resolve();
                }
            });
        });
        client.press(0, 1);
        client.press(3, 2);
        client.press(7, 3);
        await done;
        expect(state.sounding.size).toBe(keysSeen.size);
        expect(state.sounding.size).toBeGreaterThan(0);
        const offsDone = new Promise<void>((resolve) => {
            client.onMessage((msg) => {
                if (msg.type === "ready") resolve(); // reset ack arrives last
            });
        });
        client.reset(4);
        await offsDone;
        expect(state.sounding.size).toBe(0);
        client.close();
    }, 30_000);
});
