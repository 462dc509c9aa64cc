import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // live tests spawn a wall-clock paced simulator
    testTimeout: 20000,
    hookTimeout: 30000,
  },
});
