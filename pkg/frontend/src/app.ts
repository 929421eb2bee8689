/** Single-page DOM shell: dataset picker, round view with drag-to-order
 *  (3+ candidates) or click-to-pick (2), and the relearn button. */

import { ApiClient, RoundView } from './api.js';
import { RankingLoop, PresentedRound } from './loop.js';
import { newSubjectToken } from './ranking.js';

export interface AppState {
  subject: string;
  current: PresentedRound | null;
  completedRounds: string[];
}

export function createApp(root: HTMLElement, api = new ApiClient()): AppState {
  const loop = new RankingLoop(api);
  const state: AppState = { subject: newSubjectToken(), current: null, completedRounds: [] };

  const status = el('p', { className: 'status' });
  const datasetSelect = el('select') as HTMLSelectElement;
  const openButton = el('button', { textContent: 'Open round' }) as HTMLButtonElement;
  const relearnButton = el('button', {
    textContent: 'Relearn & regenerate',
    disabled: true,
    title: 'submit at least one ranking first',
  }) as HTMLButtonElement;
  const cards = el('div', { className: 'cards' });

  openButton.addEventListener('click', async () => {
    status.textContent = 'generating candidates…';
    try {
      state.current = await loop.openAndPresent(datasetSelect.value, state.subject);
      renderRound(state.current);
      status.textContent = `round ${state.current.round.id} open`;
    } catch (err) {
      status.textContent = `error: ${err instanceof Error ? err.message : err}`;
    }
  });

  relearnButton.addEventListener('click', async () => {
    if (state.completedRounds.length === 0) return;
    status.textContent = 'learning new weights…';
    try {
      const out = await loop.relearnAndRegenerate(
        state.completedRounds,
        datasetSelect.value,
        state.subject,
      );
      status.textContent =
        `learned ${out.learn.weights_id} (tau ${out.learn.tau_sum.toFixed(2)}); ` +
        `new round ${out.newRound.id}`;
      state.current = loop.present(out.newRound, state.subject);
      renderRound(state.current);
    } catch (err) {
      status.textContent = `error: ${err instanceof Error ? err.message : err}`;
    }
  });

  function renderRound(view: PresentedRound): void {
    cards.textContent = '';
    const byId = new Map(view.round.candidates.map((c) => [c.id, c]));
    for (const id of view.order) {
      const card = byId.get(id);
      if (card === undefined) continue; // never fabricate ids
      const img = el('img', { className: 'render' }) as HTMLImageElement;
      img.src = api.resolveUrl(card.render_url);
      img.alt = card.id;
      img.draggable = view.order.length > 2;
      const box = el('div', { className: 'card' });
      box.dataset.candidate = card.id;
      box.append(img);
      cards.append(box);
    }
    const submit = el('button', { textContent: 'Submit ranking' }) as HTMLButtonElement;
    submit.addEventListener('click', async () => {
      const ranking = Array.from(cards.querySelectorAll<HTMLElement>('.card')).map(
        (c) => c.dataset.candidate ?? '',
      );
      const out = await loop.submitRanking(view, ranking);
      if (out.accepted) {
        status.textContent = 'ranking accepted';
        state.completedRounds.push(view.round.id);
        relearnButton.disabled = false;
        relearnButton.title = '';
        submit.disabled = true;
      } else {
        status.textContent = `rejected: ${out.reason}`;
      }
    });
    cards.append(submit);
  }

  void api.listDatasets().then((datasets) => {
    for (const d of datasets) {
      const opt = el('option', { textContent: `${d.name} (${d.images})` }) as HTMLOptionElement;
      opt.value = d.name;
      datasetSelect.append(opt);
    }
  });

  root.append(
    el('h1', { textContent: 'Collage ranking' }),
    datasetSelect,
    openButton,
    relearnButton,
    status,
    cards,
  );
  return state;
}

function el(tag: string, props: Record<string, unknown> = {}): HTMLElement {
  const node = document.createElement(tag);
  Object.assign(node, props);
  return node;
}

export function renderClosedBanner(round: RoundView): string {
  return round.status === 'closed'
    ? `round ${round.id} is closed — results only`
    : '';
}
