import { spawnSync } from "child_process";
import { existsSync, mkdtempSync, readFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

const ROOT = join(__dirname, "..");
const CLI = join(ROOT, "dist", "cli.js");
const FIXTURES = join(ROOT, "fixtures");

function runCli(...args: string[]) {
  return spawnSync("node", [CLI, ...args], { encoding: "utf8" });
}

describe("icb-plot CLI", () => {
  const outDir = mkdtempSync(join(tmpdir(), "icb-plot-"));

  it("renders all three kinds end to end", () => {
    const jobs: [string, string][] = [
      ["ushape", "ushape_results.csv"],
      ["comparison", "comparison_results.csv"],
      ["diagnostics", "diagnostics.csv"],
    ];
    for (const [kind, file] of jobs) {
      const out = join(outDir, `${kind}.svg`);
      const res = runCli("--kind", kind, "--in", join(FIXTURES, file), "--out", out);
      expect(res.status, res.stderr).toBe(0);
      expect(existsSync(out)).toBe(true);
      expect(readFileSync(out, "utf8")).toContain("<svg");
    }
  });

  it("fails on a schema mismatch and names the column", () => {
    const res = runCli(
      "--kind", "ushape",
      "--in", join(FIXTURES, "diagnostics.csv"),
      "--out", join(outDir, "bad.svg"),
    );
    expect(res.status).toBe(1);
    expect(res.stderr).toContain("schema mismatch");
    expect(res.stderr).toContain('"d"'); // first diverging column is named
  });

  it("rejects unknown kinds with usage", () => {
    const res = runCli("--kind", "pie", "--in", "x.csv", "--out", "y.svg");
    expect(res.status).toBe(2);
    expect(res.stderr).toContain("usage:");
  });

  it("errors cleanly on a missing input file", () => {
    const res = runCli("--kind", "ushape", "--in", join(outDir, "nope.csv"), "--out", join(outDir, "z.svg"));
    expect(res.status).toBe(1);
    expect(res.stderr).toContain("cannot read");
  });
});
