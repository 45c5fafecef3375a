import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the walkthrough test boots a real service and answers 15 queries
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
