import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 180_000,
    hookTimeout: 180_000,
    // tfjs holds process-global state; one worker keeps runs deterministic.
    pool: "forks",
    poolOptions: { forks: { singleFork: true } },
  },
});
