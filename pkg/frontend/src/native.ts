/** Child-process adapter around the backend command-line interface.
 *
 * Every call marshals operands to files in a fresh temp directory, invokes
 * one subcommand, and parses the delimited result back.  The backend is the
 * only component that ever computes anything.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { SpblasStatus, statusFromExitCode } from "./errors.js";

const CLI = process.env.SPBLAS_CLI
  ? process.env.SPBLAS_CLI.split(" ")
  : ["python3", "-m", "spblas.cli"];

export interface CliResult {
  status: SpblasStatus;
  stdout: string;
  stderr: string;
}

export function runCli(
  globalFlags: string[],
  args: string[],
  files: Record<string, string> = {},
  outputs: string[] = [],
): CliResult & { files: Record<string, string> } {
  const dir = mkdtempSync(join(tmpdir(), "spblas-"));
  try {
    for (const [name, content] of Object.entries(files)) {
      writeFileSync(join(dir, name), content, "ascii");
    }
    const argv = args.map((a) => (a.startsWith("@") ? join(dir, a.slice(1)) : a));
    const proc = spawnSync(CLI[0], [...CLI.slice(1), ...globalFlags, ...argv], {
      encoding: "utf8",
    });
    if (proc.error) throw proc.error;
    const got: Record<string, string> = {};
    if (proc.status === 0) {
      for (const name of outputs) {
        got[name] = readFileSync(join(dir, name), "ascii");
      }
    }
    return {
      status: statusFromExitCode(proc.status ?? 1),
      stdout: proc.stdout ?? "",
      stderr: proc.stderr ?? "",
      files: got,
    };
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
