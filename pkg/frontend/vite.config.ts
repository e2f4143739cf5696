import { defineConfig } from "vitest/config";

// The dev server proxies /api to a locally running `sociolens serve`, so the
// dashboard and the service share an origin in development exactly as they
// do when dist/ is served behind the API host.
export default defineConfig({
  server: {
    proxy: {
      "/api": "http://127.0.0.1:8000",
    },
  },
  preview: {
    proxy: {
      "/api": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    setupFiles: ["tests/setup.ts"],
  },
});
