/**
 * Sequential audition of selected snippets. Fetching and playing are
 * injected so the queue logic runs headless; the browser wiring in
 * main.ts supplies real implementations.
 */

export type Fetcher = (snippetId: string) => Promise<ArrayBuffer>;
export type Player = (wav: ArrayBuffer, snippetId: string) => Promise<void>;

export interface PlaybackEvents {
  onStart?: (snippetId: string) => void;
  onSkip?: (snippetId: string, error: unknown) => void;
  onDone?: () => void;
}

export class PlaybackQueue {
  private stopped = false;
  private running = false;

  constructor(
    private fetcher: Fetcher,
    private player: Player,
    private events: PlaybackEvents = {},
  ) {}

  get isRunning(): boolean {
    return this.running;
  }

  stop(): void {
    this.stopped = true;
  }

  /** Play snippets one after another in the given order; a failed fetch
   * is skipped with a warning, stop() halts before the next fetch. */
  async play(snippetIds: string[]): Promise<string[]> {
    const played: string[] = [];
    this.stopped = false;
    this.running = true;
    try {
      for (const id of snippetIds) {
        if (this.stopped) break;
        let wav: ArrayBuffer;
        try {
          wav = await this.fetcher(id);
        } catch (err) {
          this.events.onSkip?.(id, err);
          continue;
        }
        if (this.stopped) break;
        this.events.onStart?.(id);
        await this.player(wav, id);
        played.push(id);
      }
    } finally {
      this.running = false;
      this.events.onDone?.();
    }
    return played;
  }
}
