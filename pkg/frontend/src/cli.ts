/** Command line: plot <field|snake|residual> <input.csv...> -o <out.svg> */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import { parseFieldCsv, parseReportCsv, parseSeriesCsv } from "./csv.js";
import { renderField, renderResidual, renderSnake } from "./render.js";

const USAGE = `usage: plot <kind> <input.csv...> -o <out.svg>

kinds:
  field     one panel per field CSV, shared color scale
  snake     overlaid snake-order traces (field or snake CSVs)
  residual  misfit and residual curves from one report CSV
`;

function label(path: string): string {
  return basename(path).replace(/\.csv$/i, "");
}

export function main(argv: string[]): number {
  if (argv[0] !== "plot" || argv.length < 2) {
    process.stderr.write(USAGE);
    return 1;
  }
  const kind = argv[1];
  const inputs: string[] = [];
  let out: string | undefined;
  for (let q = 2; q < argv.length; q++) {
    if (argv[q] === "-o" || argv[q] === "--out") {
      out = argv[++q];
    } else {
      inputs.push(argv[q]);
    }
  }
  if (!out || inputs.length === 0) {
    process.stderr.write(USAGE);
    return 1;
  }

  try {
    let svg: string;
    if (kind === "field") {
      svg = renderField(inputs.map((path) => ({
        label: label(path),
        data: parseFieldCsv(readFileSync(path, "utf8"), basename(path)),
      })));
    } else if (kind === "snake") {
      svg = renderSnake(inputs.map((path) => ({
        label: label(path),
        data: parseSeriesCsv(readFileSync(path, "utf8"), basename(path)),
      })));
    } else if (kind === "residual") {
      if (inputs.length !== 1) {
        process.stderr.write("residual takes exactly one report CSV\n");
        return 1;
      }
      svg = renderResidual(
        parseReportCsv(readFileSync(inputs[0], "utf8"), basename(inputs[0]))
      );
    } else {
      process.stderr.write(`unknown plot kind ${JSON.stringify(kind)}\n${USAGE}`);
      return 1;
    }
    writeFileSync(out, svg);
    process.stdout.write(`wrote ${out}\n`);
    return 0;
  } catch (error) {
    process.stderr.write(`plot: ${error instanceof Error ? error.message : error}\n`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
