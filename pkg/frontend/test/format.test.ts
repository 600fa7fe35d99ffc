import { describe, expect, it } from "vitest";

import { formatClock, formatInterval, tooltipText } from "../src/format";

describe("clock formatting", () => {
  it("renders mm:ss", () => {
    expect(formatClock(0)).toBe("00:00");
    expect(formatClock(83)).toBe("01:23");
    expect(formatClock(98)).toBe("01:38");
  });

  it("keeps counting minutes past the hour", () => {
    expect(formatClock(83 * 60)).toBe("83:00");
  });

  it("renders the interval from the viewer contract", () => {
    expect(formatInterval(83, 98)).toBe("01:23–01:38");
  });
});

describe("tooltip", () => {
  it("shows person, kind, interval and mean probability", () => {
    const text = tooltipText({
      kind: "typing", person: "Ann", t_start: 83, t_end: 98,
      n: 3, p_mean: 0.815, link: "https://h/v?t=83",
    });
    expect(text).toContain("Ann");
    expect(text).toContain("typing");
    expect(text).toContain("01:23–01:38");
    expect(text).toContain("0.815");
  });
});
