import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // The round-trip suite boots a real service process, so individual
    // tests may legitimately take tens of seconds.
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
