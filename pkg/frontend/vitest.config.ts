import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // server-backed suites spawn the real HTTP service and shell out for
    // reference rasters, so the defaults are too tight
    testTimeout: 30_000,
    hookTimeout: 60_000,
    pool: "forks",
  },
});
