/** HTTP client for the annotation service. */

export interface WirePoint {
  x: number;
  y: number;
  label: 0 | 1;
}

export interface UploadResponse {
  image_id: string;
  width: number;
  height: number;
}

export interface PredictResponse {
  width: number;
  height: number;
  rle: number[];
}

export interface BackendInfo {
  id: string;
  kind: string;
}

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchFn = typeof fetch;

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchFn = fetch.bind(globalThis)
  ) {}

  private async check<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body.detail) detail = String(body.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(resp.status, detail);
    }
    return resp.json() as Promise<T>;
  }

  async uploadImage(file: Blob, filename: string): Promise<UploadResponse> {
    const form = new FormData();
    form.append('file', file, filename);
    const resp = await this.fetchFn(`${this.baseUrl}/images`, {
      method: 'POST',
      body: form,
    });
    return this.check<UploadResponse>(resp);
  }

  async listBackends(): Promise<BackendInfo[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/backends`);
    return this.check<BackendInfo[]>(resp);
  }

  async predict(
    imageId: string,
    points: WirePoint[],
    backend?: string
  ): Promise<PredictResponse> {
    const body: Record<string, unknown> = { image_id: imageId, points };
    if (backend) body.backend = backend;
    const resp = await this.fetchFn(`${this.baseUrl}/predict`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    return this.check<PredictResponse>(resp);
  }

  async saveInstance(imageId: string, rle: number[]): Promise<number> {
    const resp = await this.fetchFn(`${this.baseUrl}/instances`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ image_id: imageId, rle }),
    });
    const body = await this.check<{ instance_id: number }>(resp);
    return body.instance_id;
  }

  exportUrl(imageId: string): string {
    return `${this.baseUrl}/export/${imageId}`;
  }
}
