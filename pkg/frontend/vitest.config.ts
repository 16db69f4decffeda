import { defineConfig } from "vitest/config";

// Every step spawns the engine CLI once; whole-trace parity runs take tens
// of seconds, so the per-test budget is generous.
export default defineConfig({
  test: {
    testTimeout: 180_000,
    hookTimeout: 60_000,
  },
});
