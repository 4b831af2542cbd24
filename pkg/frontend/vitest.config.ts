import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        // Same origin as the test service, so fetch is not CORS-blocked.
        url: "http://127.0.0.1:8931",
      },
    },
    globalSetup: "./tests/setup.ts",
    include: ["tests/**/*.test.ts"],
    testTimeout: 60000,
    hookTimeout: 60000,
  },
});
