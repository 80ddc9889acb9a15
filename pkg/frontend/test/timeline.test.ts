import { describe, expect, it } from "vitest";

import { emptyReform } from "../src/reform.js";
import {
  addCard,
  comparePair,
  emptyTimeline,
  findCard,
  toggleCompare,
} from "../src/timeline.js";
import type { JobPayload } from "../src/types.js";

const PAYLOAD: JobPayload = { id: "j1", kind: "solve", status: "optimal" };

function card(jobId: string) {
  return {
    jobId,
    title: jobId,
    submittedAt: 0,
    reform: emptyReform(),
    payload: { ...PAYLOAD, id: jobId },
  };
}

describe("timeline", () => {
  it("appends frozen cards without touching earlier state", () => {
    const t0 = emptyTimeline();
    const t1 = addCard(t0, card("a"));
    const t2 = addCard(t1, card("b"));
    expect(t0.cards).toHaveLength(0);
    expect(t1.cards).toHaveLength(1);
    expect(t2.cards.map((c) => c.jobId)).toEqual(["a", "b"]);
    expect(Object.isFrozen(t2.cards[0])).toBe(true);
  });

  it("card reforms are snapshots, not references", () => {
    const doc = emptyReform();
    const t = addCard(emptyTimeline(), { ...card("a"), reform: doc });
    doc.name = "mutated later";
    expect(findCard(t, "a")!.reform.name).toBe("reform");
  });

  it("compare keeps the latest two picks and toggles off", () => {
    let t = addCard(addCard(addCard(emptyTimeline(), card("a")), card("b")), card("c"));
    t = toggleCompare(t, "a");
    t = toggleCompare(t, "b");
    expect(comparePair(t)!.map((c) => c.jobId)).toEqual(["a", "b"]);
    t = toggleCompare(t, "c");
    expect(comparePair(t)!.map((c) => c.jobId)).toEqual(["b", "c"]);
    t = toggleCompare(t, "c");
    expect(comparePair(t)).toBeNull();
    expect(toggleCompare(t, "missing")).toBe(t);
  });
});
