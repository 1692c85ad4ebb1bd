#!/usr/bin/env node
// SMT-LIB 2 stdio front end over the z3-solver WASM build.
// Reads commands from stdin, evaluates them in one persistent context,
// and echoes solver output. Intended as a drop-in for `z3 -in` on hosts
// without a native z3 binary.
'use strict';

const { init } = require('z3-solver');

function splitCommands(buf) {
  // Split a buffer into complete top-level s-expressions; return
  // [commands, remainder]. Handles strings, |quoted| symbols, comments.
  const cmds = [];
  let depth = 0;
  let start = 0;
  let inStr = false;
  let inQuote = false;
  let inComment = false;
  for (let i = 0; i < buf.length; i++) {
    const c = buf[i];
    if (inComment) {
      if (c === '\n') inComment = false;
      continue;
    }
    if (inStr) {
      if (c === '"') {
        if (buf[i + 1] === '"') i++;
        else inStr = false;
      }
      continue;
    }
    if (inQuote) {
      if (c === '|') inQuote = false;
      continue;
    }
    switch (c) {
      case ';': inComment = true; break;
      case '"': inStr = true; break;
      case '|': inQuote = true; break;
      case '(': depth++; break;
      case ')':
        depth--;
        if (depth === 0) {
          cmds.push(buf.slice(start, i + 1));
          start = i + 1;
        }
        break;
    }
  }
  return [cmds, buf.slice(start)];
}

async function main() {
  const { Z3: core } = await init();
  const cfg = core.mk_config();
  const ctx = core.mk_context(cfg);
  core.del_config(cfg);

  let pending = '';
  let queue = Promise.resolve();

  const evalCmd = async (cmd) => {
    let out;
    try {
      out = await core.eval_smtlib2_string(ctx, cmd);
    } catch (e) {
      out = `(error "${String(e).replace(/"/g, "'")}")`;
    }
    if (out && out.trim().length > 0) process.stdout.write(out.trim() + '\n');
    if (/^\s*\(exit\)\s*$/.test(cmd)) process.exit(0);
  };

  process.stdin.setEncoding('utf8');
  process.stdin.on('data', (chunk) => {
    pending += chunk;
    const [cmds, rest] = splitCommands(pending);
    pending = rest;
    for (const cmd of cmds) {
      queue = queue.then(() => evalCmd(cmd));
    }
  });
  process.stdin.on('end', () => {
    queue.then(() => process.exit(0));
  });
}

main().catch((e) => {
  process.stderr.write(String(e) + '\n');
  process.exit(1);
});
