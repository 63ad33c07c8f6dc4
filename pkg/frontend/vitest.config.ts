import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    // the e2e test spawns the Python server and plays a whole match
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
