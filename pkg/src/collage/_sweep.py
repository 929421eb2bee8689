"""Fast per-image candidate sweeps for the placement search.

The optimizer repeatedly asks: with every other image fixed, which
(position, angle) of image i maximizes the fitness? Evaluating each candidate
from scratch touches the whole canvas; instead the SweepEngine paints the
canvas once without image i and evaluates each candidate as a local delta —
only the cells inside the candidate's bounding box can change hands.

The delta evaluation runs in a single compiled kernel; setting the
COLLAGE_NO_NUMBA environment variable swaps in a plain-numpy path that scores
every candidate with the reference evaluator (same results, much slower).
"""

from __future__ import annotations

import math

import numpy as np

from . import _geometry as geo
from ._accel import NUMBA_ENABLED, njit
from .compositing import adjacency_counts
from .core import ANGLES, THETA_MAX, ZERO_ANGLE_INDEX, CollageConfiguration, ImageState
from .criteria import HIST_BINS, Needs, Scene, evaluate_context, fitness


@njit(cache=True)
def _hull_count_nb(rowmin, rowmax):
    """Cell count of the convex hull given per-row extents (-1 = empty row)."""
    ch = rowmin.shape[0]
    y0 = -1
    y1 = -1
    for y in range(ch):
        if rowmin[y] >= 0:
            if y0 < 0:
                y0 = y
            y1 = y
    if y0 < 0:
        return 0
    m = 0
    pts_y = np.empty(ch, np.int64)
    pts_l = np.empty(ch, np.int64)
    pts_r = np.empty(ch, np.int64)
    for y in range(y0, y1 + 1):
        if rowmin[y] >= 0:
            pts_y[m] = y
            pts_l[m] = rowmin[y]
            pts_r[m] = -rowmax[y]
            m += 1
    # convex minorants (lower chains) of (y, xmin) and (y, -xmax)
    cyl = np.empty(m, np.int64)
    cxl = np.empty(m, np.int64)
    cyr = np.empty(m, np.int64)
    cxr = np.empty(m, np.int64)
    kl = 0
    kr = 0
    for j in range(m):
        py = pts_y[j]
        px = pts_l[j]
        while kl >= 2 and (cyl[kl - 1] - cyl[kl - 2]) * (px - cxl[kl - 2]) - (
            cxl[kl - 1] - cxl[kl - 2]
        ) * (py - cyl[kl - 2]) <= 0:
            kl -= 1
        cyl[kl] = py
        cxl[kl] = px
        kl += 1
        px = pts_r[j]
        while kr >= 2 and (cyr[kr - 1] - cyr[kr - 2]) * (px - cxr[kr - 2]) - (
            cxr[kr - 1] - cxr[kr - 2]
        ) * (py - cyr[kr - 2]) <= 0:
            kr -= 1
        cyr[kr] = py
        cxr[kr] = px
        kr += 1
    total = 0
    segl = 0
    segr = 0
    for y in range(y0, y1 + 1):
        while segl + 1 < kl - 1 and cyl[segl + 1] <= y:
            segl += 1
        if kl == 1:
            lnum = cxl[0]
            lden = 1
        else:
            ya = cyl[segl]
            xa = cxl[segl]
            yb = cyl[segl + 1]
            xb = cxl[segl + 1]
            if yb == ya:
                lnum = xa
                lden = 1
            else:
                lnum = xa * (yb - ya) + (xb - xa) * (y - ya)
                lden = yb - ya
        while segr + 1 < kr - 1 and cyr[segr + 1] <= y:
            segr += 1
        if kr == 1:
            rnum = cxr[0]
            rden = 1
        else:
            ya = cyr[segr]
            xa = cxr[segr]
            yb = cyr[segr + 1]
            xb = cxr[segr + 1]
            if yb == ya:
                rnum = xa
                rden = 1
            else:
                rnum = xa * (yb - ya) + (xb - xa) * (y - ya)
                rden = yb - ya
        xlo = -((-lnum) // lden)  # ceil of the left boundary
        xhi = (-rnum) // rden  # floor of the right boundary
        if xhi >= xlo:
            total += xhi - xlo + 1
    return total


@njit(cache=True)
def _sweep_kernel(
    n,
    i_img,
    li,
    top_img,
    cw,
    ch,
    labels_wo,
    layers,
    txs,
    tys,
    angs,
    base_count,
    base_mass,
    base_face,
    base_hist,
    base_adj,
    base_rowmin,
    base_rowmax,
    base_hull,
    msum,
    face_total,
    n_zero_others,
    thetas,
    theta_cur,
    off,
    rh,
    rw,
    cover_buf,
    mass_buf,
    face_buf,
    bins_buf,
    pos_list,
    ang_list,
    lambdas,
    need_face,
    need_hist,
    need_adj,
    need_hull,
    tmax,
    half_diag,
    ccx,
    ccy,
    base_top_cx,
    base_top_cy,
    base_top_cnt,
):
    area = float(cw * ch)
    d_count = np.zeros(n, np.int64)
    d_mass = np.zeros(n, np.float64)
    d_face = np.zeros(n, np.float64)
    d_hist = np.zeros((n, HIST_BINS), np.int64)
    d_adj = np.zeros((n, n), np.int64)
    hist_i = np.zeros(HIST_BINS, np.int64)
    touched = np.zeros(n, np.uint8)
    touch_list = np.empty(n, np.int64)
    newlab = labels_wo.copy()
    irowmin = np.full(ch, -1, np.int64)
    irowmax = np.full(ch, -1, np.int64)
    sc_rowmin = np.empty(ch, np.int64)
    sc_rowmax = np.empty(ch, np.int64)
    hull_sc = np.empty(n, np.float64)
    chi2c = np.empty((n, n), np.float64)
    ratios = np.empty(n, np.float64)
    group = np.empty(n, np.float64)
    th = theta_cur.copy()
    i_is_top = i_img == top_img
    best_f = -1.0e300
    best_p = -1
    best_a = -1
    for pi in range(pos_list.shape[0]):
        tx = pos_list[pi, 0]
        ty = pos_list[pi, 1]
        for aj in range(ang_list.shape[0]):
            ai = ang_list[aj]
            o = off[i_img, ai]
            rh_ = rh[i_img, ai]
            rw_ = rw[i_img, ai]
            x0c = tx if tx > 0 else 0
            y0c = ty if ty > 0 else 0
            x1c = min(tx + rw_, cw)
            y1c = min(ty + rh_, ch)
            visible = x1c > x0c and y1c > y0c
            ntouch = 0
            cnt_i = 0
            mass_i = 0.0
            face_i = 0.0
            sx_sum = 0.0
            sy_sum = 0.0
            if visible:
                for y in range(y0c, y1c):
                    irowmin[y] = -1
                    irowmax[y] = -1
                    rowo = o + (y - ty) * rw_ - tx
                    for x in range(x0c, x1c):
                        if cover_buf[rowo + x] != 0:
                            b = labels_wo[y, x]
                            if b < 0 or layers[b] > li:
                                cnt_i += 1
                                mass_i += mass_buf[rowo + x]
                                if need_face:
                                    face_i += face_buf[rowo + x]
                                if need_hist:
                                    hist_i[bins_buf[rowo + x]] += 1
                                if need_hull:
                                    if irowmin[y] < 0:
                                        irowmin[y] = x
                                    irowmax[y] = x
                                if i_is_top:
                                    sx_sum += x
                                    sy_sum += y
                                newlab[y, x] = i_img
                                if b >= 0:
                                    if touched[b] == 0:
                                        touched[b] = 1
                                        touch_list[ntouch] = b
                                        ntouch += 1
                                    ab = angs[b]
                                    lb = (
                                        off[b, ab]
                                        + (y - tys[b]) * rw[b, ab]
                                        + (x - txs[b])
                                    )
                                    d_count[b] -= 1
                                    d_mass[b] -= mass_buf[lb]
                                    if need_face:
                                        d_face[b] -= face_buf[lb]
                                    if need_hist:
                                        d_hist[b, bins_buf[lb]] -= 1

            # ----- always-on criteria -----
            for j in range(n):
                if j == i_img:
                    ratios[j] = mass_i / msum[j]
                else:
                    ratios[j] = (base_mass[j] + d_mass[j]) / msum[j]
            r_mean = 0.0
            for j in range(n):
                r_mean += ratios[j]
            r_mean /= n
            r_var = 0.0
            for j in range(n):
                dv = ratios[j] - r_mean
                r_var += dv * dv
            c1 = r_mean
            c3 = 1.0 - math.sqrt(r_var / n)
            tot_cnt = cnt_i
            for j in range(n):
                if j != i_img:
                    tot_cnt += base_count[j] + d_count[j]
            c2 = tot_cnt / area

            if face_total > 0.0:
                if need_face:
                    fsum = face_i
                    for j in range(n):
                        if j != i_img:
                            fsum += base_face[j] + d_face[j]
                    c4 = fsum / face_total
                else:
                    c4 = 0.0
            else:
                c4 = 1.0

            nz = n_zero_others
            if ai == ZERO_ANGLE_INDEX:
                nz += 1
            c5 = nz / n

            if i_is_top:
                if cnt_i > 0:
                    tcx = sx_sum / cnt_i + 0.5
                    tcy = sy_sum / cnt_i + 0.5
                    c6 = 1.0 - math.hypot(tcx - ccx, tcy - ccy) / half_diag
                else:
                    c6 = 0.0
            else:
                if base_top_cnt > 0:
                    c6 = 1.0 - math.hypot(base_top_cx - ccx, base_top_cy - ccy) / half_diag
                else:
                    c6 = 0.0

            # ----- adjacency-dependent criteria -----
            c7 = 0.0
            c8 = 0.0
            c9 = 0.0
            c10 = 0.0
            if need_adj and visible:
                ey0 = max(y0c - 1, 0)
                ey1 = min(y1c, ch - 1)
                ex0 = max(x0c - 1, 0)
                ex1 = min(x1c, cw - 1)
                for y in range(ey0, ey1 + 1):
                    inb_py = y0c <= y < y1c
                    for x in range(ex0, ex1 + 1):
                        inb_p = inb_py and x0c <= x < x1c
                        a_old = labels_wo[y, x]
                        a_new = newlab[y, x]
                        # directions: E, S, SE, SW
                        for d in range(4):
                            if d == 0:
                                yq = y
                                xq = x + 1
                            elif d == 1:
                                yq = y + 1
                                xq = x
                            elif d == 2:
                                yq = y + 1
                                xq = x + 1
                            else:
                                yq = y + 1
                                xq = x - 1
                            if yq >= ch or xq < 0 or xq >= cw:
                                continue
                            if not inb_p and not (
                                y0c <= yq < y1c and x0c <= xq < x1c
                            ):
                                continue
                            b_old = labels_wo[yq, xq]
                            b_new = newlab[yq, xq]
                            if a_old == a_new and b_old == b_new:
                                continue
                            if a_old >= 0 and b_old >= 0 and a_old != b_old:
                                d_adj[a_old, b_old] -= 1
                                d_adj[b_old, a_old] -= 1
                            if a_new >= 0 and b_new >= 0 and a_new != b_new:
                                d_adj[a_new, b_new] += 1
                                d_adj[b_new, a_new] += 1

            if need_adj:
                th[i_img] = thetas[ai]
                if need_hist:
                    for a in range(n):
                        for b2 in range(n):
                            chi2c[a, b2] = -1.0
                for a in range(n):
                    nn = 0
                    s8 = 0.0
                    gk = 0
                    group[gk] = th[a] / tmax
                    gk += 1
                    mind = -1.0
                    for b2 in range(n):
                        if b2 == a:
                            continue
                        if base_adj[a, b2] + d_adj[a, b2] > 0:
                            nn += 1
                            group[gk] = th[b2] / tmax
                            gk += 1
                            dd = abs(th[a] - th[b2]) / tmax
                            if mind < 0.0 or dd < mind:
                                mind = dd
                            if need_hist:
                                v = chi2c[a, b2]
                                if v < 0.0:
                                    ca = cnt_i if a == i_img else base_count[a] + d_count[a]
                                    cb = cnt_i if b2 == i_img else base_count[b2] + d_count[b2]
                                    if ca < 1:
                                        ca = 1
                                    if cb < 1:
                                        cb = 1
                                    v = 0.0
                                    for k in range(HIST_BINS):
                                        if a == i_img:
                                            hv = hist_i[k]
                                        else:
                                            hv = base_hist[a, k] + d_hist[a, k]
                                        if b2 == i_img:
                                            gv = hist_i[k]
                                        else:
                                            gv = base_hist[b2, k] + d_hist[b2, k]
                                        ha = hv / ca
                                        hb = gv / cb
                                        dv = ha - hb
                                        v += dv * dv / (ha + hb + 1e-10)
                                    v *= 0.5
                                    chi2c[a, b2] = v
                                    chi2c[b2, a] = v
                                s8 += v
                    if nn > 0:
                        if need_hist:
                            c8 += s8 / nn
                        g_mean = 0.0
                        for k in range(gk):
                            g_mean += group[k]
                        g_mean /= gk
                        g_var = 0.0
                        for k in range(gk):
                            dv = group[k] - g_mean
                            g_var += dv * dv
                        c9 += math.sqrt(g_var / gk)
                        c10 += mind
                c8 /= n
                c9 /= n
                c10 /= n

            # ----- convexity -----
            if need_hull:
                hull_i = float(_hull_count_nb(irowmin, irowmax)) if cnt_i > 0 else 0.0
                for t in range(ntouch):
                    b = touch_list[t]
                    for y in range(ch):
                        sc_rowmin[y] = base_rowmin[b, y]
                        sc_rowmax[y] = base_rowmax[b, y]
                    for y in range(y0c, y1c):
                        xm0 = sc_rowmin[y]
                        if xm0 < 0:
                            continue
                        xm1 = sc_rowmax[y]
                        xm = xm0
                        if newlab[y, xm0] == i_img:
                            xm = -1
                            for x in range(xm0 + 1, xm1 + 1):
                                if newlab[y, x] == b:
                                    xm = x
                                    break
                        if xm < 0:
                            sc_rowmin[y] = -1
                            sc_rowmax[y] = -1
                            continue
                        xM = xm1
                        if newlab[y, xm1] == i_img:
                            for x in range(xm1 - 1, xm - 1, -1):
                                if newlab[y, x] == b:
                                    xM = x
                                    break
                        sc_rowmin[y] = xm
                        sc_rowmax[y] = xM
                    hull_sc[b] = float(_hull_count_nb(sc_rowmin, sc_rowmax))
                c7 = 2.0
                for j in range(n):
                    if j == i_img:
                        cj = cnt_i
                        hj = hull_i
                    else:
                        cj = base_count[j] + d_count[j]
                        hj = hull_sc[j] if touched[j] != 0 else base_hull[j]
                    if cj > 0 and hj > 0:
                        rr = cj / hj
                        if rr < c7:
                            c7 = rr
                if c7 > 1.5:
                    c7 = 0.0

            f = (
                lambdas[0] * c1
                + lambdas[1] * c2
                + lambdas[2] * c3
                + lambdas[3] * c4
                + lambdas[4] * c5
                + lambdas[5] * c6
                + lambdas[6] * c7
                + lambdas[7] * c8
                + lambdas[8] * c9
                + lambdas[9] * c10
            )
            if f > best_f:
                best_f = f
                best_p = pi
                best_a = aj

            # ----- reset scratch -----
            if visible:
                for y in range(y0c, y1c):
                    irowmin[y] = -1
                    irowmax[y] = -1
                    for x in range(x0c, x1c):
                        newlab[y, x] = labels_wo[y, x]
            for t in range(ntouch):
                b = touch_list[t]
                touched[b] = 0
                d_count[b] = 0
                d_mass[b] = 0.0
                d_face[b] = 0.0
                if need_hist:
                    for k in range(HIST_BINS):
                        d_hist[b, k] = 0
            if need_hist:
                for k in range(HIST_BINS):
                    hist_i[k] = 0
            if need_adj:
                for a in range(n):
                    for b2 in range(n):
                        d_adj[a, b2] = 0
    return best_f, best_p, best_a


class SweepEngine:
    """Per-image best-candidate search over one scene and weight set."""

    def __init__(self, scene: Scene, weights, positions, angle_indices):
        self.scene = scene
        self.weights = weights
        self.needs = Needs.from_weights(weights)
        self.positions = np.asarray(positions, dtype=np.int64).reshape(-1, 2)
        self.angle_indices = tuple(angle_indices)
        self._ang_arr = np.asarray(self.angle_indices, dtype=np.int64)
        self._buffers = None

    # ----------------------------------------------------- packed buffers

    def _build_buffers(self, extra_angles=()):
        scene = self.scene
        n = scene.n_images
        angles = sorted(set(self.angle_indices) | set(extra_angles))
        off = np.full((n, 13), -1, dtype=np.int64)
        rh = np.zeros((n, 13), dtype=np.int64)
        rw = np.zeros((n, 13), dtype=np.int64)
        total = 0
        for i in range(n):
            for ai in angles:
                rot = scene.rotated(i, ai)
                hp, wp = rot.cover.shape
                off[i, ai] = total
                rh[i, ai] = hp
                rw[i, ai] = wp
                total += hp * wp
        cover = np.zeros(total, dtype=np.uint8)
        mass = np.zeros(total, dtype=np.float64)
        face = np.zeros(total if self.needs.face else 1, dtype=np.float64)
        bins = np.zeros(total if self.needs.hist else 1, dtype=np.int16)
        for i in range(n):
            for ai in angles:
                rot = scene.rotated(i, ai)
                o = off[i, ai]
                size = rot.cover.size
                cover[o : o + size] = rot.cover.ravel()
                mass[o : o + size] = rot.mass.ravel()
                if self.needs.face and rot.face is not None:
                    face[o : o + size] = rot.face.ravel()
                if self.needs.hist:
                    bins[o : o + size] = self.scene.rotated_bins(i, ai).ravel()
        self._buffers = (off, rh, rw, cover, mass, face, bins, set(angles))

    def _ensure_buffers(self, config):
        used = {s.theta_index for s in config.states}
        if self._buffers is None or not used <= self._buffers[7]:
            self._build_buffers(extra_angles=used)
        return self._buffers

    # ----------------------------------------------------- base state

    def _base_state(self, config: CollageConfiguration, i: int):
        scene = self.scene
        needs = self.needs
        n = scene.n_images
        cw, ch = scene.canvas.width, scene.canvas.height
        labels = np.full((ch, cw), -1, dtype=np.int16)
        windows = []
        for j in range(n):
            s = config.states[j]
            rot = scene.rotated(j, s.theta_index)
            hp, wp = rot.cover.shape
            windows.append(geo.paste_window(s.tx, s.ty, wp, hp, cw, ch))
        order = sorted(range(n), key=lambda j: config.states[j].layer, reverse=True)
        for j in order:
            if j == i or windows[j] is None:
                continue
            cy, cx, sy, sx = windows[j]
            rot = scene.rotated(j, config.states[j].theta_index)
            region = labels[cy, cx]
            region[rot.cover[sy, sx] > 0] = j
            labels[cy, cx] = region
        base_count = np.zeros(n, dtype=np.int64)
        base_mass = np.zeros(n)
        base_face = np.zeros(n)
        base_hist = np.zeros((n, HIST_BINS), dtype=np.int64)
        base_rowmin = np.full((n, ch), -1, dtype=np.int64)
        base_rowmax = np.full((n, ch), -1, dtype=np.int64)
        base_hull = np.zeros(n)
        top = next(j for j in range(n) if config.states[j].layer == 0)
        top_cx = top_cy = 0.0
        for j in range(n):
            if j == i or windows[j] is None:
                continue
            cy, cx, sy, sx = windows[j]
            s = config.states[j]
            rot = scene.rotated(j, s.theta_index)
            vis = labels[cy, cx] == j
            base_count[j] = int(vis.sum())
            if base_count[j] == 0:
                continue
            base_mass[j] = float(rot.mass[sy, sx][vis].sum())
            if needs.face and rot.face is not None:
                base_face[j] = float(rot.face[sy, sx][vis].sum())
            if needs.hist:
                bins = scene.rotated_bins(j, s.theta_index)
                base_hist[j] = np.bincount(bins[sy, sx][vis].ravel(), minlength=HIST_BINS)
            if needs.hull:
                rows_any = vis.any(axis=1)
                rmin = vis.argmax(axis=1)
                rmax = vis.shape[1] - 1 - vis[:, ::-1].argmax(axis=1)
                rows = np.nonzero(rows_any)[0]
                base_rowmin[j, rows + cy.start] = rmin[rows] + cx.start
                base_rowmax[j, rows + cy.start] = rmax[rows] + cx.start
                base_hull[j] = float(geo.hull_cell_count(base_rowmin[j], base_rowmax[j]))
            if j == top:
                ys, xs = np.nonzero(vis)
                top_cx = float(xs.mean()) + cx.start + 0.5
                top_cy = float(ys.mean()) + cy.start + 0.5
        base_adj = (
            adjacency_counts(labels, n) if needs.adj else np.zeros((n, n), dtype=np.int64)
        )
        return (
            labels,
            base_count,
            base_mass,
            base_face,
            base_hist,
            base_adj,
            base_rowmin,
            base_rowmax,
            base_hull,
            top,
            top_cx,
            top_cy,
        )

    # ----------------------------------------------------- candidate search

    def best_candidate(self, config: CollageConfiguration, i: int):
        """(fitness, tx, ty, theta_index) of the best candidate state for image i."""
        if NUMBA_ENABLED:
            return self._best_candidate_kernel(config, i)
        return self._best_candidate_reference(config, i)

    def _best_candidate_reference(self, config, i):
        best = (-math.inf, 0, 0, 0)
        layer = config.states[i].layer
        for tx, ty in self.positions:
            for ai in self.angle_indices:
                cand = config.replace_state(i, ImageState(int(tx), int(ty), ai, layer))
                f = fitness(evaluate_context(self.scene.context(cand, self.needs)), self.weights)
                if f > best[0]:
                    best = (f, int(tx), int(ty), ai)
        return best

    def _best_candidate_kernel(self, config, i):
        scene = self.scene
        needs = self.needs
        n = scene.n_images
        off, rh, rw, cover, mass, face, bins, _ = self._ensure_buffers(config)
        (
            labels,
            base_count,
            base_mass,
            base_face,
            base_hist,
            base_adj,
            base_rowmin,
            base_rowmax,
            base_hull,
            top,
            top_cx,
            top_cy,
        ) = self._base_state(config, i)
        states = config.states
        layers = np.array([s.layer for s in states], dtype=np.int64)
        txs = np.array([s.tx for s in states], dtype=np.int64)
        tys = np.array([s.ty for s in states], dtype=np.int64)
        angs = np.array([s.theta_index for s in states], dtype=np.int64)
        theta_cur = np.array([s.theta for s in states], dtype=np.float64)
        n_zero = sum(
            1 for j in range(n) if j != i and states[j].theta_index == ZERO_ANGLE_INDEX
        )
        canvas = scene.canvas
        ccx, ccy = canvas.centroid
        best_f, best_p, best_a = _sweep_kernel(
            n,
            i,
            int(states[i].layer),
            top,
            canvas.width,
            canvas.height,
            labels,
            layers,
            txs,
            tys,
            angs,
            base_count,
            base_mass,
            base_face,
            base_hist,
            base_adj,
            base_rowmin,
            base_rowmax,
            base_hull,
            scene.msum,
            scene.face_total,
            n_zero,
            np.asarray(ANGLES, dtype=np.float64),
            theta_cur,
            off,
            rh,
            rw,
            cover,
            mass,
            face,
            bins,
            self.positions,
            self._ang_arr,
            np.asarray(self.weights.lambdas, dtype=np.float64),
            needs.face,
            needs.hist,
            needs.adj,
            needs.hull,
            THETA_MAX,
            canvas.half_diagonal,
            ccx,
            ccy,
            top_cx,
            top_cy,
            int(base_count[top]) if top != i else 0,
        )
        return (
            float(best_f),
            int(self.positions[best_p, 0]),
            int(self.positions[best_p, 1]),
            int(self._ang_arr[best_a]),
        )
