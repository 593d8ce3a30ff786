#!/usr/bin/env node
/** extract --in <path> --stride N --fdesc <path> [--ldesc <path>] --concepts <model> */
import { parseArgs } from "node:util";

import { extract } from "./extract.js";

function fail(message: string): never {
  process.stderr.write(`error: ${message}\n`);
  process.exit(1);
}

export function main(argv: string[]): void {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        stride: { type: "string", default: "1" },
        fdesc: { type: "string" },
        ldesc: { type: "string" },
        concepts: { type: "string" },
      },
    }));
  } catch (err) {
    fail((err as Error).message);
  }
  if (!values.in || !values.fdesc || !values.concepts) {
    fail("--in, --fdesc and --concepts are required");
  }
  const stride = Number.parseInt(values.stride as string, 10);
  try {
    const summary = extract({
      input: values.in as string,
      stride,
      fdescOut: values.fdesc as string,
      ldescOut: values.ldesc as string | undefined,
      conceptsModel: values.concepts as string,
    });
    process.stdout.write(JSON.stringify(summary) + "\n");
  } catch (err) {
    fail((err as Error).message);
  }
}

main(process.argv.slice(2));
