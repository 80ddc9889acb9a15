import { describe, expect, it } from "vitest";

import { ApiError, WorkbenchClient } from "../src/api.js";
import { FakeService, exampleScenario } from "./fake_service.js";

function makeClient(): [WorkbenchClient, FakeService] {
  const service = new FakeService();
  return [new WorkbenchClient("", service.fetch), service];
}

describe("WorkbenchClient", () => {
  it("lists scenarios", async () => {
    const [client] = makeClient();
    const entries = await client.scenarios();
    expect(entries[0].name).toBe("example4_two_step");
  });

  it("uploads documents and reuses the id on duplicates", async () => {
    const [client] = makeClient();
    const doc = exampleScenario().population;
    const first = await client.uploadPopulation(doc);
    const second = await client.uploadPopulation(doc);
    expect(first).toMatch(/populations/);
    expect(second).toBe("dup-populations");
  });

  it("polls through running to a terminal state", async () => {
    const [client] = makeClient();
    const scenario = exampleScenario();
    const pid = await client.uploadPopulation(scenario.population);
    const cid = await client.uploadCode(scenario.code);
    const jobId = await client.submitSolve(pid, cid, scenario.reform);
    const seen: string[] = [];
    const payload = await client.pollSolve(jobId, {
      intervalMs: 1,
      onTick: (status) => seen.push(status),
    });
    expect(seen).toContain("running");
    expect(payload.status).toBe("optimal");
  });

  it("surfaces compile rejections as ApiError with the detail", async () => {
    const [client] = makeClient();
    const scenario = exampleScenario();
    const pid = await client.uploadPopulation(scenario.population);
    const cid = await client.uploadCode(scenario.code);
    const empty = { ...scenario.reform, constraints: [] };
    await expect(client.submitSolve(pid, cid, empty)).rejects.toThrowError(ApiError);
    await expect(client.submitSolve(pid, cid, empty)).rejects.toThrowError(/selects no taxpayers/);
  });

  it("fetches frontiers for sweep jobs only", async () => {
    const [client] = makeClient();
    const scenario = exampleScenario();
    const pid = await client.uploadPopulation(scenario.population);
    const cid = await client.uploadCode(scenario.code);
    const sweepId = await client.submitSolve(pid, cid, scenario.reform, [0.65, 0.7, 0.75]);
    await client.pollSolve(sweepId, { intervalMs: 1 });
    const entries = await client.getFrontier(sweepId);
    expect(entries).toHaveLength(3);
    const plainId = await client.submitSolve(pid, cid, scenario.reform);
    await client.pollSolve(plainId, { intervalMs: 1 });
    await expect(client.getFrontier(plainId)).rejects.toThrowError(ApiError);
  });
});
