/**
 * Drill tone: one oscillator whose frequency follows the server's audio_hz.
 *
 * audio_hz <= 0 means the drill is off, rendered as silence rather than a
 * zero-frequency tone.  Browsers only allow audio after a user gesture, so
 * the context is created lazily on the first update during powered input.
 */

interface OscLike {
  frequency: { value: number };
  connect(node: unknown): void;
  start(): void;
}

interface GainLike {
  gain: { value: number };
  connect(node: unknown): void;
}

export interface AudioCtxLike {
  createOscillator(): OscLike;
  createGain(): GainLike;
  destination: unknown;
  resume?(): Promise<void>;
}

export class DrillTone {
  private osc: OscLike | null = null;
  private gain: GainLike | null = null;
  /** Last frequency pushed, 0 while silent; tests read this. */
  frequencyHz = 0;

  constructor(private readonly makeCtx: () => AudioCtxLike | null) {}

  private ensure(): boolean {
    if (this.osc) return true;
    const ctx = this.makeCtx();
    if (!ctx) return false;
    this.osc = ctx.createOscillator();
    this.gain = ctx.createGain();
    this.gain.gain.value = 0;
    this.osc.connect(this.gain);
    this.gain.connect(ctx.destination);
    this.osc.start();
    void ctx.resume?.();
    return true;
  }

  update(audioHz: number): void {
    if (audioHz > 0 && !this.ensure()) return;
    if (!this.osc || !this.gain) return;
    if (audioHz > 0) {
      this.osc.frequency.value = audioHz;
      this.gain.gain.value = 0.08;
      this.frequencyHz = audioHz;
    } else {
      this.gain.gain.value = 0;
      this.frequencyHz = 0;
    }
  }
}

/** Real WebAudio factory; returns null where the API is missing (tests). */
export function defaultAudioContext(): AudioCtxLike | null {
  const Ctor = (globalThis as any).AudioContext;
  return Ctor ? new Ctor() : null;
}
