// Event-index ordered delivery. The service already streams in order, but a
// reconnect or interleaved source can hand us events early; anything ahead of
// the cursor is buffered and flushed once the gap closes.

import type { EventMessage } from "./types.js";

export class EventBuffer {
  private pending = new Map<number, EventMessage>();
  private nextIndex: number;

  constructor(
    private readonly deliver: (event: EventMessage) => void,
    startIndex = 0,
  ) {
    this.nextIndex = startIndex;
  }

  get cursor(): number {
    return this.nextIndex;
  }

  push(event: EventMessage): void {
    if (event.index < this.nextIndex) {
      return; // duplicate of something already delivered
    }
    this.pending.set(event.index, event);
    let next = this.pending.get(this.nextIndex);
    while (next !== undefined) {
      this.pending.delete(this.nextIndex);
      this.nextIndex += 1;
      this.deliver(next);
      next = this.pending.get(this.nextIndex);
    }
  }

  get buffered(): number {
    return this.pending.size;
  }
}
