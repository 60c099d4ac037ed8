import { describe, expect, it } from "vitest";

import { buildCaption, buildPlainCaption, parseCaption } from "../src/caption.js";

describe("buildCaption", () => {
  it("matches the server template exactly", () => {
    const cap = buildCaption("red square", {
      robot: [5, 6],
      start: [10, 12],
      end: [40, 40],
    });
    expect(cap).toBe(
      "the robotic arm at blue point ( 5 , 6 ) moves to the red square at red point " +
        "( 10 , 12 ) , picks it up , and then moves to green point ( 40 , 40 )",
    );
  });

  it("round-trips through parseCaption", () => {
    const pts = { robot: [13, 7] as [number, number], start: [1, 2] as [number, number], end: [60, 63] as [number, number] };
    const parsed = parseCaption(buildCaption("cyan disc", pts));
    expect(parsed).toEqual(pts);
  });

  it("plain caption carries no coordinates", () => {
    const cap = buildPlainCaption("blue triangle");
    expect(parseCaption(cap)).toBeNull();
    expect(cap).toContain("blue triangle");
  });
});
