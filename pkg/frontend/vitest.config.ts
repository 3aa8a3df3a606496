import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // the acceptance suite drives ten thousand sessions against a live
    // server process; give it room
    testTimeout: 300_000,
    hookTimeout: 60_000,
    // one spawned server per suite file; keep them from piling up
    fileParallelism: false,
  },
});
