import { describe, expect, it } from "vitest";

import {
  BAND_LOW,
  distributionalCost,
  formatMeter,
  previewConsistent,
  previewFraction,
  withinBand,
} from "../src/meter.js";

// decreasing state prices for three equally likely states
const XI = [1.5, 1.0, 0.5];

describe("distributionalCost", () => {
  it("averages ascending levels against the nonincreasing prices", () => {
    // sorted [0, 1, 2] against [1.5, 1.0, 0.5]: (0 + 1 + 1) / 3
    expect(distributionalCost([2, 0, 1], XI)).toBeCloseTo(2 / 3, 14);
  });

  it("is invariant to the order markers were placed in", () => {
    const base = distributionalCost([0.3, 1.9, 0.7], XI);
    expect(distributionalCost([1.9, 0.3, 0.7], XI)).toBe(base);
    expect(distributionalCost([0.7, 1.9, 0.3], XI)).toBe(base);
  });

  it("is linear in the levels", () => {
    const levels = [0.4, 1.1, 2.2];
    const base = distributionalCost(levels, XI);
    expect(distributionalCost(levels.map((v) => 3 * v), XI)).toBeCloseTo(3 * base, 13);
  });

  it("prices a flat placement at level times mean price", () => {
    // mean(XI) = 1, so a flat placement costs its own level
    expect(distributionalCost([1.3, 1.3, 1.3], XI)).toBeCloseTo(1.3, 14);
  });

  it("rejects mismatched vectors", () => {
    expect(() => distributionalCost([1, 2], XI)).toThrow(/state prices/);
  });
});

describe("previewFraction", () => {
  it("scales cost by the budget", () => {
    expect(previewFraction([2, 0, 1], XI, 2)).toBeCloseTo(1 / 3, 14);
    expect(() => previewFraction([1, 1, 1], XI, 0)).toThrow(/budget/);
  });
});

describe("withinBand", () => {
  it("accepts exactly the 99–100% band", () => {
    expect(withinBand(0.99)).toBe(true);
    expect(withinBand(1.0)).toBe(true);
    expect(withinBand(0.995)).toBe(true);
    expect(withinBand(0.9899)).toBe(false);
    expect(withinBand(1.0001)).toBe(false);
    expect(withinBand(0)).toBe(false);
  });

  it("tolerates rounding noise on both edges", () => {
    expect(withinBand(BAND_LOW - 1e-12)).toBe(true);
    expect(withinBand(1.0 + 1e-12)).toBe(true);
    expect(withinBand(BAND_LOW - 1e-6)).toBe(false);
  });
});

describe("formatMeter", () => {
  it("shows two decimals of percent", () => {
    expect(formatMeter(0.995)).toBe("99.50%");
    expect(formatMeter(1)).toBe("100.00%");
    expect(formatMeter(0)).toBe("0.00%");
    expect(formatMeter(0.33333)).toBe("33.33%");
  });
});

describe("previewConsistent", () => {
  it("matches the display rounding of the percent meter", () => {
    expect(previewConsistent(0.995, 0.995 + 4e-5)).toBe(true);
    expect(previewConsistent(0.995, 0.995 + 6e-5)).toBe(false);
  });
});
