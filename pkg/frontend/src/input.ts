// Keyboard and pointer bindings for the eight buttons.
//
// Home-row keys map to buttons 0-7; key auto-repeat is suppressed so a
// held key produces exactly one press until its key-up. The tracker is
// DOM-free (takes event-shaped objects) so it is unit-testable.

export const KEY_BINDINGS = ["a", "s", "d", "f", "j", "k", "l", ";"];

export interface KeyLikeEvent {
    key: string;
    repeat?: boolean;
}

export interface ButtonEvent {
    button: number;
    down: boolean;
    t_ms: number;
}

export function buttonForKey(key: string): number | null {
    const idx = KEY_BINDINGS.indexOf(key.toLowerCase());
    return idx >= 0 ? idx : null;
}

export class InputTracker {
    private down = new Set<number>();

    keyDown(ev: KeyLikeEvent, t_ms: number): ButtonEvent | null {
        if (ev.repeat) return null;
        const button = buttonForKey(ev.key);
        if (button === null || this.down.has(button)) return null;
        this.down.add(button);
        return { button, down: true, t_ms };
    }

    keyUp(ev: KeyLikeEvent, t_ms: number): ButtonEvent | null {
        const button = buttonForKey(ev.key);
        if (button === null || !this.down.has(button)) return null;
        this.down.delete(button);
        return { button, down: false, t_ms };
    }

    pointerDown(button: number, t_ms: number): ButtonEvent | null {
        if (button < 0 || button > 7 || this.down.has(button)) return null;
        this.down.add(button);
        return { button, down: true, t_ms };
    }

    pointerUp(button: number, t_ms: number): ButtonEvent | null {
        if (!this.down.has(button)) return null;
        this.down.delete(button);
        return { button, down: false, t_ms };
    }

    isDown(button: number): boolean {
        return this.down.has(button);
    }

    releaseAll(t_ms: number): ButtonEvent[] {
        const events = [...this.down].sort().map(
            (button) => ({ button, down: false, t_ms }));
        this.down.clear();
        return events;
    }
}
