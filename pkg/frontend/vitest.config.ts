import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    globalSetup: "./tests/global-setup.ts",
    testTimeout: 20000,
    hookTimeout: 60000,
    fileParallelism: false,
  },
});
