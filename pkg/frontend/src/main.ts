/** Browser wiring: canvas rendering, buttons, and keyboard shortcuts. */

import { BackendInfo, ServiceClient, WirePoint } from './api.js';
import { CANONICAL_SIDE, canonicalToDisplay } from './coords.js';
import { AnnotationController, View } from './controller.js';

const SERVICE_URL =
  new URLSearchParams(location.search).get('service') ?? 'http://localhost:8000';

const INSTANCE_COLORS = [
  '#fb923c', '#3b82f6', '#22c55e', '#a855f7', '#ec4899', '#06b6d4',
];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class CanvasView implements View {
  private imageCanvas = el<HTMLCanvasElement>('image-canvas');
  private overlayCanvas = el<HTMLCanvasElement>('overlay-canvas');
  private pointsCanvas = el<HTMLCanvasElement>('points-canvas');
  private badge = el<HTMLSpanElement>('saved-badge');
  private errorBanner = el<HTMLDivElement>('error-banner');
  private backendSelect = el<HTMLSelectElement>('backend-select');
  private generateBtn = el<HTMLButtonElement>('generate-btn');
  private saveBtn = el<HTMLButtonElement>('save-btn');
  private exportLink = el<HTMLAnchorElement>('export-link');
  private savedMasks: Uint8Array[] = [];

  scale(): number {
    return this.imageCanvas.getBoundingClientRect().width / CANONICAL_SIDE;
  }

  showImage(imageId: string): void {
    this.savedMasks = [];
    const ctx = this.imageCanvas.getContext('2d')!;
    const img = new Image();
    img.onload = () => ctx.drawImage(img, 0, 0);
    // the service keeps the canonical image; re-render from the export of an
    // empty label map is pointless, so we draw the uploaded file client-side
    img.src = this.pendingObjectUrl ?? '';
    this.errorBanner.hidden = true;
  }

  pendingObjectUrl: string | null = null;

  drawPoints(points: WirePoint[]): void {
    const ctx = this.pointsCanvas.getContext('2d')!;
    ctx.clearRect(0, 0, CANONICAL_SIDE, CANONICAL_SIDE);
    for (const p of points) {
      const { x, y } = canonicalToDisplay(p.x, p.y, 1);
      ctx.beginPath();
      ctx.arc(x, y, 6, 0, 2 * Math.PI);
      ctx.fillStyle = p.label === 1 ? '#22c55e' : '#ef4444';
      ctx.fill();
      ctx.strokeStyle = '#ffffff';
      ctx.lineWidth = 2;
      ctx.stroke();
    }
  }

  drawOverlay(mask: Uint8Array, width: number, height: number): void {
    const ctx = this.overlayCanvas.getContext('2d')!;
    const data = ctx.createImageData(width, height);
    for (let i = 0; i < mask.length; i++) {
      if (mask[i]) {
        data.data[4 * i] = 59;
        data.data[4 * i + 1] = 130;
        data.data[4 * i + 2] = 246;
        data.data[4 * i + 3] = 110;
      }
    }
    for (let k = 0; k < this.savedMasks.length; k++) {
      const color = INSTANCE_COLORS[k % INSTANCE_COLORS.length];
      const [r, g, b] = [1, 3, 5].map((i) => parseInt(color.slice(i, i + 2), 16));
      const saved = this.savedMasks[k];
      for (let i = 0; i < saved.length; i++) {
        if (saved[i]) {
          data.data[4 * i] = r;
          data.data[4 * i + 1] = g;
          data.data[4 * i + 2] = b;
          data.data[4 * i + 3] = 140;
        }
      }
    }
    ctx.putImageData(data, 0, 0);
  }

  rememberSaved(mask: Uint8Array): void {
    this.savedMasks.push(mask);
  }

  clearOverlay(): void {
    const ctx = this.overlayCanvas.getContext('2d')!;
    ctx.clearRect(0, 0, CANONICAL_SIDE, CANONICAL_SIDE);
    if (this.savedMasks.length > 0) {
      this.drawOverlay(new Uint8Array(CANONICAL_SIDE * CANONICAL_SIDE), CANONICAL_SIDE, CANONICAL_SIDE);
    }
  }

  setBadge(count: number): void {
    this.badge.textContent = String(count);
  }

  setBackends(backends: BackendInfo[], selected: string): void {
    this.backendSelect.innerHTML = '';
    for (const b of backends) {
      const opt = document.createElement('option');
      opt.value = b.id;
      opt.textContent = `${b.id} (${b.kind})`;
      opt.selected = b.id === selected;
      this.backendSelect.appendChild(opt);
    }
  }

  setGenerateEnabled(enabled: boolean): void {
    this.generateBtn.disabled = !enabled;
  }

  setSaveEnabled(enabled: boolean): void {
    this.saveBtn.disabled = !enabled;
  }

  showError(message: string): void {
    this.errorBanner.textContent = message;
    this.errorBanner.hidden = false;
  }

  setExportUrl(url: string | null): void {
    this.exportLink.hidden = url === null;
    if (url) this.exportLink.href = url;
  }
}

function wire(): void {
  const view = new CanvasView();
  const client = new ServiceClient(SERVICE_URL);
  const controller = new AnnotationController(client, view);
  void controller.loadBackends();

  el<HTMLInputElement>('file-input').addEventListener('change', (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    view.pendingObjectUrl = URL.createObjectURL(file);
    void controller.upload(file, file.name);
  });

  const positiveBtn = el<HTMLButtonElement>('mode-positive');
  const negativeBtn = el<HTMLButtonElement>('mode-negative');
  const setMode = (mode: 'positive' | 'negative') => {
    controller.setMode(mode);
    positiveBtn.classList.toggle('active', mode === 'positive');
    negativeBtn.classList.toggle('active', mode === 'negative');
  };
  positiveBtn.addEventListener('click', () => setMode('positive'));
  negativeBtn.addEventListener('click', () => setMode('negative'));
  document.addEventListener('keydown', (ev) => {
    if (ev.key === 'p') setMode('positive');
    if (ev.key === 'n') setMode('negative');
  });

  el<HTMLCanvasElement>('points-canvas').addEventListener('click', (ev) => {
    const rect = (ev.target as HTMLElement).getBoundingClientRect();
    controller.handleCanvasClick(
      ev.clientX - rect.left,
      ev.clientY - rect.top,
      view.scale()
    );
  });

  el<HTMLButtonElement>('generate-btn').addEventListener('click', () => {
    void controller.generateMask();
  });
  el<HTMLButtonElement>('save-btn').addEventListener('click', () => {
    const mask = controller.state.lastMask;
    void controller.saveInstance().then(() => {
      if (mask) view.rememberSaved(mask);
    });
  });
  el<HTMLSelectElement>('backend-select').addEventListener('change', (ev) => {
    controller.selectBackend((ev.target as HTMLSelectElement).value);
  });
}

document.addEventListener('DOMContentLoaded', wire);
