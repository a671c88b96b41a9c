// Request dispatch and the line-oriented serve loop. One request in flight
// at a time; a failed request answers with an error and the loop keeps
// going. Only `shutdown` (or EOF) ends the worker.

import * as readline from 'node:readline';
import { Backend } from './backends';
import {
  PROTOCOL_VERSION,
  Request,
  Response,
  asStatements,
  asTexts,
  fail,
  ok,
  parseRequest,
  serializeResponse,
} from './protocol';

export interface Dispatch {
  response: Response;
  shutdown: boolean;
}

export function handleRequest(backend: Backend, req: Request): Dispatch {
  const id = req.id;
  try {
    switch (req.op) {
      case 'hello':
        return {
          response: ok(id, {
            version: PROTOCOL_VERSION,
            backend: backend.name,
            capabilities: ['train', 'continue_train', 'score', 'save', 'load'],
          }),
          shutdown: false,
        };
      case 'train': {
        const statements = asStatements(req.statements ?? []);
        const hp = (req.hyperparameters ?? {}) as Record<string, unknown>;
        const seed = typeof req.seed === 'number' ? req.seed : 0;
        return { response: ok(id, backend.train(statements, hp, seed)), shutdown: false };
      }
      case 'continue_train': {
        const statements = asStatements(req.statements ?? []);
        const epochs = typeof req.epochs === 'number' ? req.epochs : 1;
        const seed = typeof req.seed === 'number' ? req.seed : 0;
        return {
          response: ok(id, backend.continueTrain(String(req.model_id), statements, epochs, seed)),
          shutdown: false,
        };
      }
      case 'score': {
        const texts = asTexts(req.texts ?? []);
        const scores = backend.score(String(req.model_id), texts);
        if (scores.length !== texts.length) {
          throw new Error(`backend returned ${scores.length} scores for ${texts.length} texts`);
        }
        return { response: ok(id, { scores }), shutdown: false };
      }
      case 'save':
        backend.save(String(req.model_id), String(req.path));
        return { response: ok(id, { path: String(req.path) }), shutdown: false };
      case 'load':
        return { response: ok(id, { model_id: backend.load(String(req.path)) }), shutdown: false };
      case 'shutdown':
        return { response: ok(id, { ok: true }), shutdown: true };
      default:
        throw new Error(`unknown op ${JSON.stringify(req.op)}`);
    }
  } catch (exc) {
    return { response: fail(id, exc), shutdown: false };
  }
}

export function serve(backend: Backend, input: NodeJS.ReadableStream,
                      output: NodeJS.WritableStream): Promise<void> {
  const rl = readline.createInterface({ input, terminal: false });
  return new Promise(resolve => {
    rl.on('line', (line: string) => {
      if (line.trim() === '') {
        return;
      }
      let req: Request;
      try {
        req = parseRequest(line);
      } catch (exc) {
        // unparseable input cannot echo an id back; still never fatal
        output.write(serializeResponse(fail(null, exc)));
        return;
      }
      const { response, shutdown } = handleRequest(backend, req);
      output.write(serializeResponse(response));
      if (shutdown) {
        rl.close();
      }
    });
    rl.on('close', resolve);
  });
}
