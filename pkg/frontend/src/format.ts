/**
 * Title-table parsing and the core analyzer's embedding file format.
 *
 * The vector file starts with a `d=<dim>` header line, then one line per
 * article: the article id followed by `dim` space-separated decimal
 * components. Components are written with six decimal places, which keeps
 * cosine errors below 1e-5 for dimensions up to about 1024.
 */

export interface TitleRow {
    articleId: string;
    title: string;
}

export class DuplicateIdError extends Error {
    constructor(id: string) {
        super(`duplicate article id: ${id}`);
        this.name = "DuplicateIdError";
    }
}

export class EmptyTitleError extends Error {
    constructor(id: string) {
        super(`empty title for article id: ${id}`);
        this.name = "EmptyTitleError";
    }
}

/** Parse a TSV of `article_id<TAB>title` rows. Blank lines are skipped. */
export function parseTitleTable(text: string): TitleRow[] {
    const rows: TitleRow[] = [];
    const seen = new Set<string>();
    const lines = text.split("\n");
    for (let i = 0; i < lines.length; i++) {
        const line = lines[i].replace(/\r$/, "");
        if (line.trim() === "") continue;
        const tab = line.indexOf("\t");
        if (tab <= 0) {
            throw new Error(`line ${i + 1}: expected article_id<TAB>title`);
        }
        const articleId = line.slice(0, tab).trim();
        const title = line.slice(tab + 1).trim();
        if (seen.has(articleId)) throw new DuplicateIdError(articleId);
        if (title === "") throw new EmptyTitleError(articleId);
        seen.add(articleId);
        rows.push({ articleId, title });
    }
    return rows;
}

export interface EmbeddedRow {
    articleId: string;
    vector: number[];
}

/** Render the vector file; every row must match the stated dimension. */
export function formatEmbeddingFile(rows: EmbeddedRow[], dim: number): string {
    const out: string[] = [`d=${dim}`];
    for (const row of rows) {
        if (row.vector.length !== dim) {
            throw new Error(
                `article ${row.articleId}: vector has ${row.vector.length} components, expected ${dim}`,
            );
        }
        const comps = row.vector.map((c) => c.toFixed(6)).join(" ");
        out.push(`${row.articleId} ${comps}`);
    }
    return out.join("\n") + "\n";
}
