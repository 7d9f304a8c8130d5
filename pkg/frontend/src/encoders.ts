/**
 * Sentence encoders producing fixed-dimension vectors.
 *
 * The default `hash` backend is fully offline and deterministic: token
 * counts are scattered into the vector by a stable digest and the result
 * is L2-normalized, so identical titles always yield identical vectors.
 * The `transformer` backend loads a transformers.js feature-extraction
 * pipeline when the package and model weights are available locally;
 * when they are not, loading fails and the CLI exits with code 1.
 */

import { createHash } from "node:crypto";

export interface SentenceEncoder {
    readonly name: string;
    readonly dim: number | null; // null until the first batch fixes it
    encode(texts: string[]): Promise<number[][]>;
}

export class EncoderLoadError extends Error {
    constructor(message: string) {
        super(message);
        this.name = "EncoderLoadError";
    }
}

const TOKEN_RE = /[a-z0-9]+/g;

export class HashEncoder implements SentenceEncoder {
    readonly name = "hash";
    readonly dim: number;

    constructor(dim: number = 384) {
        if (dim < 8) throw new Error("embedding dimension must be at least 8");
        this.dim = dim;
    }

    private embedOne(text: string): number[] {
        const tokens = text.toLowerCase().match(TOKEN_RE) ?? [];
        if (tokens.length === 0) {
            throw new Error(`cannot embed text without tokens: ${JSON.stringify(text)}`);
        }
        const vec = new Array<number>(this.dim).fill(0);
        for (const token of tokens) {
            const digest = createHash("sha1").update(token, "utf-8").digest();
            const slot = Number(digest.readBigUInt64BE(0) % BigInt(this.dim));
            vec[slot] += 1;
        }
        const norm = Math.sqrt(vec.reduce((acc, c) => acc + c * c, 0));
        return vec.map((c) => c / norm);
    }

    async encode(texts: string[]): Promise<number[][]> {
        return texts.map((t) => this.embedOne(t));
    }
}

export type Pooling = "mean" | "cls";

interface FeatureExtractionPipeline {
    (texts: string[], options: { pooling: Pooling; normalize: boolean }): Promise<{
        data: Float32Array | number[];
        dims: number[];
    }>;
}

class TransformerEncoder implements SentenceEncoder {
    readonly name: string;
    dim: number | null = null;

    constructor(
        private readonly pipe: FeatureExtractionPipeline,
        model: string,
        private readonly pooling: Pooling,
    ) {
        this.name = `transformer:${model}`;
    }

    async encode(texts: string[]): Promise<number[][]> {
        const output = await this.pipe(texts, { pooling: this.pooling, normalize: true });
        const [n, dim] = output.dims;
        this.dim = dim;
        const flat = Array.from(output.data);
        const rows: number[][] = [];
        for (let i = 0; i < n; i++) {
            rows.push(flat.slice(i * dim, (i + 1) * dim));
        }
        return rows;
    }
}

export async function loadTransformerEncoder(
    model: string,
    pooling: Pooling = "mean",
): Promise<SentenceEncoder> {
    let pipelineFactory: (task: string, model: string) => Promise<unknown>;
    try {
        // optional dependency: resolved only when this backend is requested
        const mod = await import("@xenova/transformers" as string);
        pipelineFactory = mod.pipeline;
    } catch (err) {
        throw new EncoderLoadError(
            `transformers.js is not installed (${(err as Error).message})`,
        );
    }
    try {
        const pipe = (await pipelineFactory(
            "feature-extraction",
            model,
        )) as FeatureExtractionPipeline;
        return new TransformerEncoder(pipe, model, pooling);
    } catch (err) {
        throw new EncoderLoadError(
            `failed to load encoder ${model}: ${(err as Error).message}`,
        );
    }
}
