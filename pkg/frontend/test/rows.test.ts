import { describe, expect, it } from "vitest";

import { RowGrid, gridForSession, riskFreeGross } from "../src/rows.js";

describe("RowGrid", () => {
  const grid = new RowGrid({ referenceWealth: 1.03 });

  it("defaults to 0–200% in 2% steps", () => {
    expect(grid.rowCount).toBe(101);
    expect(grid.percents[0]).toBe(0);
    expect(grid.percents[100]).toBe(200);
    expect(grid.percents[1]).toBe(2);
  });

  it("puts the bottom row at zero wealth and the reference row at 100%", () => {
    expect(grid.bottomRow).toBe(0);
    expect(grid.wealthOfRow(grid.bottomRow)).toBe(0);
    expect(grid.referenceRow).toBe(50);
    expect(grid.wealthOfRow(grid.referenceRow)).toBeCloseTo(1.03, 12);
    expect(grid.wealthOfRow(100)).toBeCloseTo(2.06, 12);
  });

  it("maps wealth back to the nearest row, clamped to the grid", () => {
    expect(grid.rowOfWealth(1.03)).toBe(50);
    expect(grid.rowOfWealth(1.03 * 1.009)).toBe(50); // closer to 100% than 102%
    expect(grid.rowOfWealth(1.03 * 1.011)).toBe(51);
    expect(grid.rowOfWealth(0)).toBe(0);
    expect(grid.rowOfWealth(-3)).toBe(0);
    expect(grid.rowOfWealth(500)).toBe(100);
  });

  it("rejects rows outside the grid", () => {
    expect(() => grid.wealthOfRow(-1)).toThrow(/outside/);
    expect(() => grid.wealthOfRow(101)).toThrow(/outside/);
    expect(() => grid.wealthOfRow(1.5)).toThrow(/outside/);
  });

  it("supports custom spacing as a presentation choice", () => {
    const fine = new RowGrid({ referenceWealth: 2, maxPercent: 150, stepPercent: 0.5 });
    expect(fine.rowCount).toBe(301);
    expect(fine.referenceRow).toBe(200);
    expect(fine.wealthOfRow(200)).toBeCloseTo(2, 12);
  });

  it("insists the reference row exists", () => {
    expect(() => new RowGrid({ referenceWealth: 1, maxPercent: 201, stepPercent: 3 })).toThrow(/divide 100/);
    expect(() => new RowGrid({ referenceWealth: 1, maxPercent: 199 })).toThrow(/multiple/);
    expect(() => new RowGrid({ referenceWealth: 0 })).toThrow(/positive/);
  });
});

describe("riskFreeGross", () => {
  it("recovers 1 + r from the pricing identity mean(xi)(1+r) = 1", () => {
    // three equally likely states priced with mean(xi) = 1/1.04
    const xi = [1.5 / 1.04, 1.0 / 1.04, 0.5 / 1.04];
    expect(riskFreeGross(xi)).toBeCloseTo(1.04, 12);
  });

  it("builds the session grid from budget and state prices alone", () => {
    const doc = { budget: 2.0, state_prices: [1.25, 1.0, 0.75] }; // mean 1 -> r = 0
    const grid = gridForSession(doc);
    expect(grid.referenceWealth).toBeCloseTo(2.0, 12);
    const finer = gridForSession(doc, { stepPercent: 1, maxPercent: 120 });
    expect(finer.rowCount).toBe(121);
  });

  it("rejects empty or nonpositive price vectors", () => {
    expect(() => riskFreeGross([])).toThrow(/empty/);
    expect(() => riskFreeGross([0, 0])).toThrow(/positive/);
  });
});
