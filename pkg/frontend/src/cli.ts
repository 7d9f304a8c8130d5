#!/usr/bin/env node
/**
 * embed-export: turn an article-title TSV into the analyzer's vector file.
 *
 *   embed-export --input titles.tsv --output vectors.txt [--encoder hash]
 *                [--dim 384] [--model Xenova/all-MiniLM-L6-v2] [--pooling mean]
 *
 * Exit codes: 0 success, 2 validation problem (bad arguments, unreadable
 * input, duplicate article id, empty title), 1 encoder load or runtime
 * failure.
 */

import * as fs from "node:fs";

import {
    EncoderLoadError,
    HashEncoder,
    Pooling,
    SentenceEncoder,
    loadTransformerEncoder,
} from "./encoders";
import { formatEmbeddingFile, parseTitleTable } from "./format";

interface CliOptions {
    input: string;
    output: string;
    encoder: "hash" | "transformer";
    dim: number;
    model: string;
    pooling: Pooling;
}

class UsageError extends Error {}

const DEFAULTS = {
    encoder: "hash" as const,
    dim: 384,
    model: "Xenova/all-MiniLM-L6-v2",
    pooling: "mean" as const,
};

export function parseArgs(argv: string[]): CliOptions {
    const opts: Partial<CliOptions> = { ...DEFAULTS };
    for (let i = 0; i < argv.length; i++) {
        const flag = argv[i];
        const next = () => {
            const value = argv[++i];
            if (value === undefined) throw new UsageError(`${flag} needs a value`);
            return value;
        };
        switch (flag) {
            case "--input":
                opts.input = next();
                break;
            case "--output":
                opts.output = next();
                break;
            case "--encoder": {
                const value = next();
                if (value !== "hash" && value !== "transformer") {
                    throw new UsageError(`--encoder must be 'hash' or 'transformer', got ${value}`);
                }
                opts.encoder = value;
                break;
            }
            case "--dim": {
                const value = Number(next());
                if (!Number.isInteger(value) || value < 8) {
                    throw new UsageError("--dim must be an integer >= 8");
                }
                opts.dim = value;
                break;
            }
            case "--model":
                opts.model = next();
                break;
            case "--pooling": {
                const value = next();
                if (value !== "mean" && value !== "cls") {
                    throw new UsageError(`--pooling must be 'mean' or 'cls', got ${value}`);
                }
                opts.pooling = value;
                break;
            }
            case "--help":
            case "-h":
                throw new UsageError("help");
            default:
                throw new UsageError(`unknown flag ${flag}`);
        }
    }
    if (!opts.input) throw new UsageError("--input is required");
    if (!opts.output) throw new UsageError("--output is required");
    return opts as CliOptions;
}

const USAGE =
    "usage: embed-export --input titles.tsv --output vectors.txt " +
    "[--encoder hash|transformer] [--dim N] [--model NAME] [--pooling mean|cls]";

export async function run(argv: string[]): Promise<number> {
    let opts: CliOptions;
    try {
        opts = parseArgs(argv);
    } catch (err) {
        console.error(USAGE);
        if ((err as Error).message !== "help") {
            console.error(`error: ${(err as Error).message}`);
        }
        return 2;
    }

    let text: string;
    try {
        text = fs.readFileSync(opts.input, "utf-8");
    } catch (err) {
        console.error(`error: cannot read ${opts.input}: ${(err as Error).message}`);
        return 2;
    }

    let rows;
    try {
        rows = parseTitleTable(text); // duplicate ids and empty titles land here
    } catch (err) {
        console.error(`error: ${(err as Error).message}`);
        return 2;
    }
    if (rows.length === 0) {
        console.error("error: title table is empty");
        return 2;
    }

    let encoder: SentenceEncoder;
    try {
        encoder =
            opts.encoder === "hash"
                ? new HashEncoder(opts.dim)
                : await loadTransformerEncoder(opts.model, opts.pooling);
    } catch (err) {
        console.error(`error: ${(err as Error).message}`);
        return err instanceof EncoderLoadError ? 1 : 2;
    }

    try {
        const vectors = await encoder.encode(rows.map((r) => r.title));
        const dim = encoder.dim ?? vectors[0].length;
        const payload = formatEmbeddingFile(
            rows.map((row, i) => ({ articleId: row.articleId, vector: vectors[i] })),
            dim,
        );
        fs.writeFileSync(opts.output, payload, "utf-8");
        console.log(
            `wrote ${rows.length} vectors (d=${dim}, encoder=${encoder.name}) to ${opts.output}`,
        );
        return 0;
    } catch (err) {
        console.error(`error: ${(err as Error).message}`);
        return 1;
    }
}

if (require.main === module) {
    run(process.argv.slice(2)).then((code) => {
        process.exitCode = code;
    });
}
