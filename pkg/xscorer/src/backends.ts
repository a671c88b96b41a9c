// Scoring backends behind a common interface. `echo` has no ML at all and
// exists for protocol conformance tests; `tiny` actually trains.

import { StatementRecord } from './protocol';
import {
  DEFAULT_HYPERPARAMETERS,
  Hyperparameters,
  TinyModel,
  fit,
  resolveHyperparameters,
} from './tinymodel';

export interface TrainOutcome {
  model_id: string;
  epoch_losses: number[];
  validation_losses?: number[];
}

export interface Backend {
  readonly name: string;
  train(statements: StatementRecord[], hp: Record<string, unknown>, seed: number): TrainOutcome;
  continueTrain(modelId: string, statements: StatementRecord[], epochs: number,
                seed: number): TrainOutcome;
  score(modelId: string, texts: string[]): number[];
  save(modelId: string, path: string): void;
  load(path: string): string;
}

export class EchoBackend implements Backend {
  readonly name = 'echo';
  private known = new Set<string>();
  private counter = 0;

  private register(): string {
    this.counter += 1;
    const id = `m${this.counter}`;
    this.known.add(id);
    return id;
  }

  private check(modelId: string): void {
    if (!this.known.has(modelId)) {
      throw new Error(`no model ${JSON.stringify(modelId)}`);
    }
  }

  train(statements: StatementRecord[]): TrainOutcome {
    if (statements.length === 0) {
      throw new Error('train needs statements');
    }
    return { model_id: this.register(), epoch_losses: [0.693, 0.5, 0.4] };
  }

  continueTrain(modelId: string): TrainOutcome {
    this.check(modelId);
    return { model_id: this.register(), epoch_losses: [0.4, 0.35] };
  }

  score(modelId: string, texts: string[]): number[] {
    this.check(modelId);
    return texts.map(() => 0.5);
  }

  save(modelId: string, path: string): void {
    this.check(modelId);
    require('node:fs').writeFileSync(path, JSON.stringify({ echo_model: modelId }));
  }

  load(path: string): string {
    JSON.parse(require('node:fs').readFileSync(path, 'utf-8'));
    return this.register();
  }
}

export class TinyBackend implements Backend {
  readonly name = 'tiny';
  private models = new Map<string, TinyModel>();
  private counter = 0;

  private register(model: TinyModel): string {
    this.counter += 1;
    const id = `m${this.counter}`;
    this.models.set(id, model);
    return id;
  }

  private get(modelId: string): TinyModel {
    const model = this.models.get(modelId);
    if (!model) {
      throw new Error(`no model ${JSON.stringify(modelId)}`);
    }
    return model;
  }

  train(statements: StatementRecord[], hp: Record<string, unknown>, seed: number): TrainOutcome {
    const resolved = resolveHyperparameters(hp);
    const fresh = TinyModel.init(seed);
    const { model, epochLosses, validationLosses } = fit(fresh, statements, resolved, seed);
    return {
      model_id: this.register(model),
      epoch_losses: epochLosses,
      validation_losses: validationLosses,
    };
  }

  continueTrain(modelId: string, statements: StatementRecord[], epochs: number,
                seed: number): TrainOutcome {
    const base = this.get(modelId);
    const hp: Hyperparameters = { ...DEFAULT_HYPERPARAMETERS, epochs };
    const { model, epochLosses, validationLosses } = fit(base, statements, hp, seed);
    return {
      model_id: this.register(model),
      epoch_losses: epochLosses,
      validation_losses: validationLosses,
    };
  }

  score(modelId: string, texts: string[]): number[] {
    return this.get(modelId).score(texts);
  }

  save(modelId: string, path: string): void {
    this.get(modelId).save(path);
  }

  load(path: string): string {
    return this.register(TinyModel.load(path));
  }
}

export function makeBackend(name: string): Backend {
  if (name === 'echo') {
    return new EchoBackend();
  }
  if (name === 'tiny') {
    return new TinyBackend();
  }
  throw new Error(`unknown backend "${name}" (expected echo or tiny)`);
}
