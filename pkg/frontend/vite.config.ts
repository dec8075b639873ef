import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    proxy: {
      "/sessions": {
        target: "http://localhost:8000",
        ws: true,
      },
    },
  },
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
  },
});
