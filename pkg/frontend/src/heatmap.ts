// Lookahead heatmap: rows are buttons, columns are piano keys, cell
// intensity proportional to next-note probability. The geometry/intensity
// computation is pure; the canvas painting is a thin wrapper.

export interface Cell {
    x: number;
    y: number;
    w: number;
    h: number;
    alpha: number; // 0..1, relative to the matrix max
    row: number;
    col: number;
}

export function heatmapCells(matrix: number[][], width: number, height: number): Cell[] {
    const rows = matrix.length;
    if (rows === 0) return [];
    const cols = matrix[0].length;
    let max = 0;
    for (const row of matrix) for (const p of row) max = Math.max(max, p);
    if (max <= 0) max = 1;
    const cw = width / cols;
    const ch = height / rows;
    const cells: Cell[] = [];
    for (let r = 0; r < rows; r++) {
        for (let c = 0; c < cols; c++) {
            const alpha = matrix[r][c] / max;
            if (alpha < 1e-3) continue; // keep the draw list sparse
            cells.push({ x: c * cw, y: r * ch, w: cw, h: ch, alpha, row: r, col: c });
        }
    }
    return cells;
}

export interface Canvas2DLike {
    clearRect(x: number, y: number, w: number, h: number): void;
    fillRect(x: number, y: number, w: number, h: number): void;
    fillStyle: unknown; // string is all we assign; DOM contexts type it wider
}

export function drawHeatmap(ctx: Canvas2DLike, matrix: number[][],
                            width: number, height: number): number {
    ctx.clearRect(0, 0, width, height);
    const cells = heatmapCells(matrix, width, height);
    for (const cell of cells) {
        ctx.fillStyle = `rgba(80, 200, 255, ${cell.alpha.toFixed(3)})`;
        ctx.fillRect(cell.x, cell.y, cell.w, cell.h);
    }
    return cells.length;
}
