import { defineConfig } from "vitest/config";

// Every test drives the real command line tool as a subprocess, so the
// budget per test is interpreter startups, not computation.
export default defineConfig({
  test: {
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
