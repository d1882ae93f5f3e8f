import { defineConfig } from 'vitest/config';

// tfjs graph construction and the interop round trips run on the CPU
// backend, so individual tests can take tens of seconds
export default defineConfig({
  test: {
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
