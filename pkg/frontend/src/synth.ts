// Polyphonic piano-ish synth: one oscillator voice per sounding key with a
// plucked envelope through a lowpass. Takes anything AudioContext-shaped so
// tests can pass a fake; no samples, no assets.

export function keyToFrequencyHz(key: number): number {
    // key 0 is the lowest piano key at 27.5 Hz; 12 keys per octave
    return 27.5 * Math.pow(2, key / 12);
}

export interface AudioParamLike {
    value: number;
    setValueAtTime(v: number, t: number): unknown;
    linearRampToValueAtTime(v: number, t: number): unknown;
    exponentialRampToValueAtTime(v: number, t: number): unknown;
}

export interface AudioNodeLike {
    connect(dst: AudioNodeLike): unknown;
    disconnect?(): unknown;
}

export interface OscillatorLike extends AudioNodeLike {
    type: string;
    frequency: AudioParamLike;
    start(t?: number): unknown;
    stop(t?: number): unknown;
}

export interface GainLike extends AudioNodeLike {
    gain: AudioParamLike;
}

export interface FilterLike extends AudioNodeLike {
    type: string;
    frequency: AudioParamLike;
    Q: AudioParamLike;
}

export interface AudioContextLike {
    currentTime: number;
    destination: AudioNodeLike;
    createOscillator(): OscillatorLike;
    createGain(): GainLike;
    createBiquadFilter(): FilterLike;
}

interface Voice {
    osc: OscillatorLike;
    gain: GainLike;
}

const ATTACK_S = 0.005;
const DECAY_S = 2.5;
const RELEASE_S = 0.08;

export class Synth {
    private voices = new Map<number, Voice>();

    constructor(private ctx: AudioContextLike, private volume = 0.25) {}

    noteOn(key: number): void {
        if (key < 0 || key > 87) return;
        this.noteOff(key); // retrigger safety
        const t = this.ctx.currentTime;
        const osc = this.ctx.createOscillator();
        osc.type = "triangle";
        osc.frequency.setValueAtTime(keyToFrequencyHz(key), t);
        const filter = this.ctx.createBiquadFilter();
        filter.type = "lowpass";
        filter.frequency.setValueAtTime(Math.min(8000, keyToFrequencyHz(key) * 8), t);
        filter.Q.setValueAtTime(0.5, t);
        const gain = this.ctx.createGain();
        gain.gain.setValueAtTime(0, t);
        gain.gain.linearRampToValueAtTime(this.volume, t + ATTACK_S);
        gain.gain.exponentialRampToValueAtTime(this.volume * 1e-3, t + DECAY_S);
        osc.connect(filter);
        filter.connect(gain);
        gain.connect(this.ctx.destination);
        osc.start(t);
        osc.stop(t + DECAY_S + 0.1);
        this.voices.set(key, { osc, gain });
    }

    noteOff(key: number): void {
        const voice = this.voices.get(key);
        if (!voice) return; // off without on: ignored
        const t = this.ctx.currentTime;
        voice.gain.gain.setValueAtTime(voice.gain.gain.value, t);
        voice.gain.gain.exponentialRampToValueAtTime(1e-4, t + RELEASE_S);
        voice.osc.stop(t + RELEASE_S + 0.02);
        this.voices.delete(key);
    }

    allOff(): void {
        for (const key of [...this.voices.keys()]) this.noteOff(key);
    }

    activeVoices(): number {
        return this.voices.size;
    }
}
