import assert from "node:assert/strict";
import { test } from "node:test";

import { RequestGate } from "../src/api.js";

test("only the newest generation is accepted", () => {
  const gate = new RequestGate();
  const g1 = gate.next();
  const g2 = gate.next();
  assert.equal(gate.accept(g1), false);
  assert.equal(gate.accept(g2), true);
});

test("out-of-order completions never overwrite newer data", async () => {
  const gate = new RequestGate();
  let applied = "";
  const apply = (gen: string, data: string) => {
    if (gate.accept(gen)) applied = data;
  };

  // a slow request for an old window resolves after a fast newer one
  const slowGen = gate.next();
  const slow = new Promise<void>((resolve) =>
    setTimeout(() => {
      apply(slowGen, "stale window");
      resolve();
    }, 20),
  );
  const fastGen = gate.next();
  apply(fastGen, "fresh window");
  await slow;
  assert.equal(applied, "fresh window");
});

test("interleaving storm settles on the last issued request", async () => {
  const gate = new RequestGate();
  let applied = -1;
  const jobs: Promise<void>[] = [];
  for (let i = 0; i < 50; i++) {
    const gen = gate.next();
    const delay = (97 * i) % 13; // scrambled completion order
    jobs.push(
      new Promise((resolve) =>
        setTimeout(() => {
          if (gate.accept(gen)) applied = i;
          resolve();
        }, delay),
      ),
    );
  }
  await Promise.all(jobs);
  assert.equal(applied, 49);
});
