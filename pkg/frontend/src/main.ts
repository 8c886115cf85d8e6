// Browser entry point: wires inputs, the websocket client, the synth and
// the lookahead heatmap together against the service at ws://<host>/ws.

import { GenieClient } from "./client.js";
import { drawHeatmap } from "./heatmap.js";
import { InputTracker, KEY_BINDINGS } from "./input.js";
import { Synth } from "./synth.js";
import { UiState } from "./state.js";

const LOOKAHEAD_REFRESH_MS = 150;

function now(): number {
    return performance.now();
}

function setup(): void {
    const state = new UiState();
    const tracker = new InputTracker();
    let synth: Synth | null = null;

    const buttonsEl = document.getElementById("buttons")!;
    const statusEl = document.getElementById("status")!;
    const noticeEl = document.getElementById("notice")!;
    const canvas = document.getElementById("heatmap") as HTMLCanvasElement;
    const tempSlider = document.getElementById("temperature") as HTMLInputElement;
    const tempLabel = document.getElementById("temperature-label")!;

    const buttonEls: HTMLElement[] = [];
    for (let b = 0; b < 8; b++) {
        const el = document.createElement("div");
        el.className = "genie-button";
        el.textContent = KEY_BINDINGS[b];
        el.dataset.button = String(b);
        buttonsEl.appendChild(el);
        buttonEls.push(el);
    }

    const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
    const client = new GenieClient(() => new WebSocket(url) as never, {
        temperature: Number(tempSlider.value),
    });

    function ensureAudio(): void {
        // audio contexts start suspended until a user gesture
        if (!synth) {
            const ctx = new AudioContext();
            synth = new Synth(ctx);
        }
    }

    function render(): void {
        statusEl.textContent = state.connection === "open"
            ? `connected (session ${state.sessionId ?? "…"})`
            : state.connection;
        statusEl.className = state.connection;
        for (let b = 0; b < 8; b++) {
            buttonEls[b].classList.toggle("pressed", state.pressed[b]);
        }
        noticeEl.textContent = state.lookaheadNotice ?? state.lastError ?? "";
        const ctx2d = canvas.getContext("2d")!;
        if (state.lookahead) {
            canvas.style.opacity = "1";
            drawHeatmap(ctx2d, state.lookahead, canvas.width, canvas.height);
        } else {
            canvas.style.opacity = "0.15";
            ctx2d.clearRect(0, 0, canvas.width, canvas.height);
        }
        tempLabel.textContent = Number(tempSlider.value).toFixed(2);
    }

    function pressButton(button: number, t_ms: number): void {
        ensureAudio();
        state.localPress(button);
        client.press(button, t_ms);
        render();
    }

    function releaseButton(button: number, t_ms: number): void {
        state.localRelease(button);
        client.release(button, t_ms);
        render();
    }

    client.onStatus((status) => {
        state.connection = status;
        if (status === "closed") {
            // server sessions are not persistent: silence everything locally
            synth?.allOff();
            state.sounding.clear();
            tracker.releaseAll(now());
            state.pressed.fill(false);
        }
        render();
    });

    client.onMessage((msg) => {
        state.applyServer(msg);
        if (msg.type === "note_on") {
            ensureAudio();
            synth!.noteOn(msg.key);
        } else if (msg.type === "note_off") {
            synth?.noteOff(msg.key);
        }
        render();
    });

    window.addEventListener("keydown", (ev) => {
        const event = tracker.keyDown(ev, now());
        if (event) pressButton(event.button, event.t_ms);
    });
    window.addEventListener("keyup", (ev) => {
        const event = tracker.keyUp(ev, now());
        if (event) releaseButton(event.button, event.t_ms);
    });
    window.addEventListener("blur", () => {
        for (const event of tracker.releaseAll(now())) {
            releaseButton(event.button, event.t_ms);
        }
    });

    buttonEls.forEach((el, b) => {
        el.addEventListener("pointerdown", (ev) => {
            ev.preventDefault();
            el.setPointerCapture(ev.pointerId);
            const event = tracker.pointerDown(b, now());
            if (event) pressButton(b, event.t_ms);
        });
        const up = () => {
            const event = tracker.pointerUp(b, now());
            if (event) releaseButton(b, event.t_ms);
        };
        el.addEventListener("pointerup", up);
        el.addEventListener("pointercancel", up);
    });

    tempSlider.addEventListener("input", () => {
        client.setTemperature(Number(tempSlider.value));
        render();
    });

    setInterval(() => {
        if (state.connection === "open" && state.lookaheadNotice === null) {
            client.lookahead();
        }
    }, LOOKAHEAD_REFRESH_MS);

    client.connect();
    render();
}

if (typeof document !== "undefined") {
    window.addEventListener("DOMContentLoaded", setup);
}
