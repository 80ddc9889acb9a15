/**
 * Session timeline of solve results.  Cards are immutable: re-solving
 * after an edit appends a new card rather than mutating history, which
 * is what makes compare-and-iterate work.
 */

import type { JobPayload, ReformDoc } from "./types.js";

export interface ResultCard {
  readonly jobId: string;
  readonly title: string;
  readonly submittedAt: number;
  readonly reform: ReformDoc;
  readonly payload: JobPayload;
}

export interface Timeline {
  readonly cards: readonly ResultCard[];
  readonly compare: readonly string[]; // job ids, at most two
}

export function emptyTimeline(): Timeline {
  return { cards: [], compare: [] };
}

export function addCard(timeline: Timeline, card: ResultCard): Timeline {
  const frozen = Object.freeze({
    ...card,
    reform: JSON.parse(JSON.stringify(card.reform)) as ReformDoc,
  });
  return { cards: [...timeline.cards, frozen], compare: timeline.compare };
}

export function findCard(timeline: Timeline, jobId: string): ResultCard | undefined {
  return timeline.cards.find((c) => c.jobId === jobId);
}

/** Toggle a card in the comparison pair (most recent two picks win). */
export function toggleCompare(timeline: Timeline, jobId: string): Timeline {
  if (!findCard(timeline, jobId)) {
    return timeline;
  }
  let compare = timeline.compare.filter((id) => id !== jobId);
  if (compare.length === timeline.compare.length) {
    compare = [...compare, jobId].slice(-2);
  }
  return { cards: timeline.cards, compare };
}

export function comparePair(timeline: Timeline): [ResultCard, ResultCard] | null {
  if (timeline.compare.length !== 2) {
    return null;
  }
  const [a, b] = timeline.compare.map((id) => findCard(timeline, id));
  return a && b ? [a, b] : null;
}
