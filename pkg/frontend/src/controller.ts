/**
 * UI state machine for the annotation workflow: upload, click points,
 * generate a mask, save instances. Rendering is delegated to a View
 * implementation so the logic is testable without a browser.
 */

import { BackendInfo, PredictResponse, ServiceClient, WirePoint } from './api.js';
import { displayToCanonical, inCanvas } from './coords.js';
import { decodeRle } from './rle.js';

export type ClickMode = 'positive' | 'negative';

export interface UiState {
  imageId: string | null;
  mode: ClickMode;
  points: WirePoint[];
  lastMask: Uint8Array | null;
  lastRle: number[] | null;
  savedCount: number;
  backends: BackendInfo[];
  selectedBackend: string;
  busy: boolean;
}

export interface View {
  showImage(imageId: string): void;
  drawPoints(points: WirePoint[]): void;
  drawOverlay(mask: Uint8Array, width: number, height: number): void;
  clearOverlay(): void;
  setBadge(count: number): void;
  setBackends(backends: BackendInfo[], selected: string): void;
  setGenerateEnabled(enabled: boolean): void;
  setSaveEnabled(enabled: boolean): void;
  showError(message: string): void;
  setExportUrl(url: string | null): void;
}

export function initialState(): UiState {
  return {
    imageId: null,
    mode: 'positive',
    points: [],
    lastMask: null,
    lastRle: null,
    savedCount: 0,
    backends: [],
    selectedBackend: 'baseline',
    busy: false,
  };
}

export class AnnotationController {
  state: UiState = initialState();

  constructor(private client: ServiceClient, private view: View) {}

  private refreshButtons(): void {
    const hasPositive = this.state.points.some((p) => p.label === 1);
    this.view.setGenerateEnabled(
      this.state.imageId !== null && hasPositive && !this.state.busy
    );
    this.view.setSaveEnabled(this.state.lastRle !== null && !this.state.busy);
  }

  async loadBackends(): Promise<void> {
    try {
      this.state.backends = await this.client.listBackends();
      if (!this.state.backends.some((b) => b.id === this.state.selectedBackend)) {
        this.state.selectedBackend = this.state.backends[0]?.id ?? 'baseline';
      }
      this.view.setBackends(this.state.backends, this.state.selectedBackend);
    } catch (e) {
      this.view.showError(String(e));
    }
  }

  selectBackend(id: string): void {
    this.state.selectedBackend = id;
  }

  setMode(mode: ClickMode): void {
    this.state.mode = mode;
  }

  async upload(file: Blob, filename: string): Promise<void> {
    try {
      const resp = await this.client.uploadImage(file, filename);
      // fresh session: clear points, overlay, and counters
      this.state = { ...initialState(), backends: this.state.backends,
                     selectedBackend: this.state.selectedBackend };
      this.state.imageId = resp.image_id;
      this.view.showImage(resp.image_id);
      this.view.clearOverlay();
      this.view.drawPoints([]);
      this.view.setBadge(0);
      this.view.setExportUrl(this.client.exportUrl(resp.image_id));
    } catch (e) {
      this.view.showError(String(e));
    }
    this.refreshButtons();
  }

  /** Map a canvas click to a canonical point; clicks outside are ignored. */
  handleCanvasClick(displayX: number, displayY: number, scale: number): void {
    if (this.state.imageId === null || !inCanvas(displayX, displayY, scale)) {
      return;
    }
    const { x, y } = displayToCanonical(displayX, displayY, scale);
    this.state.points.push({ x, y, label: this.state.mode === 'positive' ? 1 : 0 });
    this.view.drawPoints(this.state.points);
    this.refreshButtons();
  }

  async generateMask(): Promise<void> {
    if (this.state.imageId === null) return;
    if (!this.state.points.some((p) => p.label === 1)) {
      this.view.showError('add at least one positive point first');
      return;
    }
    if (this.state.busy) return;
    this.state.busy = true;
    this.refreshButtons();
    try {
      const resp: PredictResponse = await this.client.predict(
        this.state.imageId,
        this.state.points,
        this.state.selectedBackend
      );
      this.state.lastRle = resp.rle;
      this.state.lastMask = decodeRle(resp.rle, resp.width, resp.height);
      this.view.drawOverlay(this.state.lastMask, resp.width, resp.height);
    } catch (e) {
      this.view.showError(String(e));
    } finally {
      this.state.busy = false;
      this.refreshButtons();
    }
  }

  async saveInstance(): Promise<void> {
    if (this.state.imageId === null || this.state.lastRle === null) return;
    try {
      const instanceId = await this.client.saveInstance(
        this.state.imageId,
        this.state.lastRle
      );
      this.state.savedCount = instanceId;
      this.state.points = [];
      this.state.lastRle = null;
      this.state.lastMask = null;
      this.view.setBadge(instanceId);
      this.view.drawPoints([]);
      this.view.clearOverlay();
    } catch (e) {
      this.view.showError(String(e));
    }
    this.refreshButtons();
  }
}
