// A small trainable statement scorer: hashed tokens -> averaged embedding
// -> dense logit -> sigmoid. Stands in for a full pretrained encoder when
// the worker runs without GPU-scale dependencies; the wire contract is the
// same either way.

import * as fs from 'node:fs';
import { StatementRecord } from './protocol';

export interface Hyperparameters {
  epochs: number;
  learning_rate: number;
  weight_decay: number;
  warmup_ratio: number;
  batch_size: number;
  validation_fraction: number;
  freeze: 'none' | 'encoder';
}

export const DEFAULT_HYPERPARAMETERS: Hyperparameters = {
  epochs: 15,
  learning_rate: 1e-6,
  weight_decay: 0.01,
  warmup_ratio: 0.1,
  batch_size: 16,
  validation_fraction: 0.1,
  freeze: 'none',
};

export function resolveHyperparameters(overrides: Record<string, unknown>): Hyperparameters {
  const hp: Record<string, unknown> = { ...DEFAULT_HYPERPARAMETERS };
  for (const [key, value] of Object.entries(overrides)) {
    if (!(key in hp)) {
      throw new Error(`unknown hyperparameter "${key}"`);
    }
    hp[key] = value;
  }
  return hp as unknown as Hyperparameters;
}

// deterministic 32-bit PRNG so a payload seed fixes the whole run
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

export function hashToken(token: string, buckets: number): number {
  let h = FNV_OFFSET;
  for (let i = 0; i < token.length; i++) {
    h ^= token.charCodeAt(i);
    h = Math.imul(h, FNV_PRIME) >>> 0;
  }
  return h % buckets;
}

export function tokenize(text: string): string[] {
  return text.toLowerCase().split(/[^a-z0-9]+/).filter(t => t.length > 0);
}

const VOCAB = 4096;
const DIM = 16;

export class TinyModel {
  embedding: Float64Array; // VOCAB x DIM, row-major
  dense: Float64Array; // DIM
  bias: number;

  constructor(embedding: Float64Array, dense: Float64Array, bias: number) {
    this.embedding = embedding;
    this.dense = dense;
    this.bias = bias;
  }

  static init(seed: number): TinyModel {
    const rng = mulberry32(seed);
    const embedding = new Float64Array(VOCAB * DIM);
    for (let i = 0; i < embedding.length; i++) {
      embedding[i] = (rng() - 0.5) * 0.1;
    }
    const dense = new Float64Array(DIM);
    for (let i = 0; i < DIM; i++) {
      dense[i] = (rng() - 0.5) * 0.1;
    }
    return new TinyModel(embedding, dense, 0);
  }

  clone(): TinyModel {
    return new TinyModel(this.embedding.slice(), this.dense.slice(), this.bias);
  }

  pool(text: string): { h: Float64Array; ids: number[] } {
    const ids = tokenize(text).map(t => hashToken(t, VOCAB));
    const h = new Float64Array(DIM);
    if (ids.length === 0) {
      return { h, ids };
    }
    for (const id of ids) {
      const base = id * DIM;
      for (let d = 0; d < DIM; d++) {
        h[d] += this.embedding[base + d];
      }
    }
    for (let d = 0; d < DIM; d++) {
      h[d] /= ids.length;
    }
    return { h, ids };
  }

  probability(text: string): number {
    const { h } = this.pool(text);
    let z = this.bias;
    for (let d = 0; d < DIM; d++) {
      z += this.dense[d] * h[d];
    }
    return 1 / (1 + Math.exp(-Math.max(-30, Math.min(30, z))));
  }

  score(texts: string[]): number[] {
    return texts.map(t => this.probability(t));
  }

  save(path: string): void {
    const doc = {
      format: 'xscorer-tiny/1',
      vocab: VOCAB,
      dim: DIM,
      embedding: Array.from(this.embedding),
      dense: Array.from(this.dense),
      bias: this.bias,
    };
    fs.writeFileSync(path, JSON.stringify(doc));
  }

  static load(path: string): TinyModel {
    const doc = JSON.parse(fs.readFileSync(path, 'utf-8'));
    if (doc.format !== 'xscorer-tiny/1' || doc.vocab !== VOCAB || doc.dim !== DIM) {
      throw new Error(`${path}: not a compatible model file`);
    }
    const embedding = Float64Array.from(doc.embedding as number[]);
    const dense = Float64Array.from(doc.dense as number[]);
    if (embedding.length !== VOCAB * DIM || dense.length !== DIM) {
      throw new Error(`${path}: wrong parameter count`);
    }
    return new TinyModel(embedding, dense, doc.bias as number);
  }
}

function bceLoss(p: number, y: number): number {
  const eps = 1e-12;
  return -(y * Math.log(p + eps) + (1 - y) * Math.log(1 - p + eps));
}

class Adam {
  m: Float64Array;
  v: Float64Array;
  t = 0;
  constructor(size: number, readonly beta1 = 0.9, readonly beta2 = 0.999, readonly eps = 1e-8) {
    this.m = new Float64Array(size);
    this.v = new Float64Array(size);
  }

  // sparse-friendly: only touches the listed indices, weight decay decoupled
  step(params: Float64Array, grads: Map<number, number>, lr: number, wd: number): void {
    this.t += 1;
    const bc1 = 1 - Math.pow(this.beta1, this.t);
    const bc2 = 1 - Math.pow(this.beta2, this.t);
    for (const [i, g] of grads) {
      this.m[i] = this.beta1 * this.m[i] + (1 - this.beta1) * g;
      this.v[i] = this.beta2 * this.v[i] + (1 - this.beta2) * g * g;
      const mhat = this.m[i] / bc1;
      const vhat = this.v[i] / bc2;
      params[i] -= lr * (mhat / (Math.sqrt(vhat) + this.eps) + wd * params[i]);
    }
  }
}

export interface FitResult {
  model: TinyModel;
  epochLosses: number[];
  validationLosses: number[];
}

export function fit(model: TinyModel, data: StatementRecord[], hp: Hyperparameters,
                    seed: number): FitResult {
  if (data.length === 0) {
    throw new Error('training needs at least one statement');
  }
  const out = model.clone();
  const rng = mulberry32(seed ^ 0x5eed);

  // seeded shuffle, then carve off the validation tail
  const order = data.map((_, i) => i);
  for (let i = order.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  const nVal = Math.floor(data.length * hp.validation_fraction);
  const trainIdx = order.slice(0, data.length - nVal);
  const valIdx = order.slice(data.length - nVal);
  if (trainIdx.length === 0) {
    throw new Error('validation split left no training data');
  }

  const embedOpt = new Adam(out.embedding.length);
  const denseOpt = new Adam(out.dense.length + 1); // dense weights plus bias
  const stepsPerEpoch = Math.ceil(trainIdx.length / hp.batch_size);
  const totalSteps = stepsPerEpoch * hp.epochs;
  const warmupSteps = Math.max(1, Math.ceil(totalSteps * hp.warmup_ratio));
  let step = 0;

  const lrAt = (s: number): number => {
    if (s < warmupSteps) {
      return hp.learning_rate * (s + 1) / warmupSteps;
    }
    const remain = Math.max(0, totalSteps - s);
    return hp.learning_rate * remain / Math.max(1, totalSteps - warmupSteps);
  };

  const epochLosses: number[] = [];
  const validationLosses: number[] = [];
  for (let epoch = 0; epoch < hp.epochs; epoch++) {
    // fresh order each epoch
    for (let i = trainIdx.length - 1; i > 0; i--) {
      const j = Math.floor(rng() * (i + 1));
      [trainIdx[i], trainIdx[j]] = [trainIdx[j], trainIdx[i]];
    }
    let lossSum = 0;
    for (let start = 0; start < trainIdx.length; start += hp.batch_size) {
      const batch = trainIdx.slice(start, start + hp.batch_size);
      const embedGrads = new Map<number, number>();
      const denseGrads = new Map<number, number>();
      for (const idx of batch) {
        const row = data[idx];
        const y = row.truth ? 1 : 0;
        const { h, ids } = out.pool(row.text);
        let z = out.bias;
        for (let d = 0; d < DIM; d++) {
          z += out.dense[d] * h[d];
        }
        const p = 1 / (1 + Math.exp(-Math.max(-30, Math.min(30, z))));
        lossSum += bceLoss(p, y);
        const dz = (p - y) / batch.length;
        for (let d = 0; d < DIM; d++) {
          denseGrads.set(d, (denseGrads.get(d) ?? 0) + dz * h[d]);
        }
        denseGrads.set(DIM, (denseGrads.get(DIM) ?? 0) + dz);
        if (hp.freeze !== 'encoder' && ids.length > 0) {
          for (const id of ids) {
            for (let d = 0; d < DIM; d++) {
              const k = id * DIM + d;
              embedGrads.set(k, (embedGrads.get(k) ?? 0) + dz * out.dense[d] / ids.length);
            }
          }
        }
      }
      const lr = lrAt(step);
      step += 1;
      if (embedGrads.size > 0) {
        embedOpt.step(out.embedding, embedGrads, lr, hp.weight_decay);
      }
      // bias rides along as the last slot of the dense parameter block
      const packed = new Float64Array(DIM + 1);
      packed.set(out.dense);
      packed[DIM] = out.bias;
      denseOpt.step(packed, denseGrads, lr, hp.weight_decay);
      out.dense.set(packed.subarray(0, DIM));
      out.bias = packed[DIM];
    }
    epochLosses.push(lossSum / trainIdx.length);
    if (valIdx.length > 0) {
      let valSum = 0;
      for (const idx of valIdx) {
        valSum += bceLoss(out.probability(data[idx].text), data[idx].truth ? 1 : 0);
      }
      validationLosses.push(valSum / valIdx.length);
    }
  }
  return { model: out, epochLosses, validationLosses };
}
