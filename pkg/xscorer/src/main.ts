#!/usr/bin/env node
// Worker entry point. Default transport is stdio; --tcp serves one
// connection at a time on a local socket instead.

import * as net from 'node:net';
import { makeBackend } from './backends';
import { serve } from './serve';

function parseArgs(argv: string[]): { backend: string; tcp: number | null } {
  let backend = 'echo';
  let tcp: number | null = null;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === '--backend' && i + 1 < argv.length) {
      backend = argv[++i];
    } else if (argv[i] === '--tcp' && i + 1 < argv.length) {
      tcp = Number(argv[++i]);
    } else {
      process.stderr.write(`unknown argument ${argv[i]}\n`);
      process.exit(2);
    }
  }
  return { backend, tcp };
}

async function main(): Promise<void> {
  const { backend: backendName, tcp } = parseArgs(process.argv.slice(2));
  if (tcp !== null) {
    const server = net.createServer(socket => {
      const backend = makeBackend(backendName);
      serve(backend, socket, socket).then(() => socket.end());
    });
    server.listen(tcp, '127.0.0.1', () => {
      process.stderr.write(`listening on tcp://127.0.0.1:${(server.address() as net.AddressInfo).port}\n`);
    });
    return;
  }
  await serve(makeBackend(backendName), process.stdin, process.stdout);
}

main().catch(exc => {
  process.stderr.write(`${exc}\n`);
  process.exit(1);
});
