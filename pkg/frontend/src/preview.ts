/**
 * In-browser playback of the masked output. The container is raw RGB24
 * frames behind a fixed 24-byte header, so the player never downloads
 * the whole file: it reads the header once, then fetches each frame
 * with a byte-range request and paints it onto a canvas.
 *
 * Only the job's processed output URL is ever fetched here; the
 * original upload stays server-side.
 */

export interface RvfHeader {
  width: number;
  height: number;
  frameCount: number;
  fpsNum: number;
  fpsDen: number;
}

export const HEADER_BYTES = 24;
const MAGIC = "RVF1";

export function parseRvfHeader(buffer: ArrayBuffer): RvfHeader {
  if (buffer.byteLength < HEADER_BYTES) {
    throw new Error(`header needs ${HEADER_BYTES} bytes, got ${buffer.byteLength}`);
  }
  const view = new DataView(buffer);
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(magic)}`);
  }
  const header: RvfHeader = {
    width: view.getUint32(4, true),
    height: view.getUint32(8, true),
    frameCount: view.getUint32(12, true),
    fpsNum: view.getUint32(16, true),
    fpsDen: view.getUint32(20, true),
  };
  if (header.width === 0 || header.height === 0) {
    throw new Error("degenerate frame size");
  }
  return header;
}

export function frameBytes(header: RvfHeader): number {
  return header.width * header.height * 3;
}

/** Inclusive byte range of frame i, ready for a Range header. */
export function frameByteRange(header: RvfHeader, index: number): [number, number] {
  if (index < 0 || index >= header.frameCount) {
    throw new Error(`frame ${index} outside 0..${header.frameCount - 1}`);
  }
  const size = frameBytes(header);
  const start = HEADER_BYTES + index * size;
  return [start, start + size - 1];
}

/** RGB24 to the RGBA layout ImageData wants. */
export function frameToRgba(header: RvfHeader, rgb: Uint8Array): Uint8ClampedArray<ArrayBuffer> {
  const pixels = header.width * header.height;
  if (rgb.length !== pixels * 3) {
    throw new Error(`frame payload is ${rgb.length} bytes, expected ${pixels * 3}`);
  }
  const rgba = new Uint8ClampedArray(new ArrayBuffer(pixels * 4));
  for (let p = 0; p < pixels; p++) {
    rgba[p * 4] = rgb[p * 3] as number;
    rgba[p * 4 + 1] = rgb[p * 3 + 1] as number;
    rgba[p * 4 + 2] = rgb[p * 3 + 2] as number;
    rgba[p * 4 + 3] = 255;
  }
  return rgba;
}

export function frameIntervalMs(header: RvfHeader): number {
  if (header.fpsNum === 0) return 40;
  return (1000 * header.fpsDen) / header.fpsNum;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class RangeReader {
  readonly url: string;
  private fetchImpl: FetchLike;

  constructor(url: string, fetchImpl?: FetchLike) {
    this.url = url;
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  async readHeader(): Promise<RvfHeader> {
    const bytes = await this.readRange(0, HEADER_BYTES - 1);
    return parseRvfHeader(bytes.buffer as ArrayBuffer);
  }

  async readFrame(header: RvfHeader, index: number): Promise<Uint8Array> {
    const [start, end] = frameByteRange(header, index);
    return this.readRange(start, end);
  }

  private async readRange(start: number, end: number): Promise<Uint8Array> {
    const response = await this.fetchImpl(this.url, {
      headers: { Range: `bytes=${start}-${end}` },
    });
    if (!response.ok && response.status !== 206) {
      throw new Error(`range fetch failed with ${response.status}`);
    }
    const body = new Uint8Array(await response.arrayBuffer());
    // a server free to ignore Range sends the whole file back
    if (response.status !== 206 && body.length > end - start + 1) {
      return body.slice(start, end + 1);
    }
    return body;
  }
}

/** Canvas playback loop over a RangeReader. */
export class RvfPlayer {
  private reader: RangeReader;
  private canvas: HTMLCanvasElement;
  private header: RvfHeader | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private frame = 0;
  private drawing = false;

  constructor(canvas: HTMLCanvasElement, url: string, fetchImpl?: FetchLike) {
    this.canvas = canvas;
    this.reader = new RangeReader(url, fetchImpl);
  }

  async load(): Promise<RvfHeader> {
    this.header = await this.reader.readHeader();
    this.canvas.width = this.header.width;
    this.canvas.height = this.header.height;
    await this.drawFrame(0);
    return this.header;
  }

  private async drawFrame(index: number): Promise<void> {
    if (!this.header || this.drawing) return;
    this.drawing = true;
    try {
      const rgb = await this.reader.readFrame(this.header, index);
      const context = this.canvas.getContext("2d");
      if (context) {
        const image = new ImageData(frameToRgba(this.header, rgb), this.header.width);
        context.putImageData(image, 0, 0);
      }
      this.frame = index;
    } finally {
      this.drawing = false;
    }
  }

  play(): void {
    if (!this.header || this.timer !== null) return;
    const header = this.header;
    this.timer = setInterval(() => {
      void this.drawFrame((this.frame + 1) % header.frameCount);
    }, frameIntervalMs(header));
  }

  pause(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  get playing(): boolean {
    return this.timer !== null;
  }
}
